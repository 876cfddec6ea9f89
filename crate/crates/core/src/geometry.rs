//! Planar geometry and the map projections used to lay the study area onto
//! a metric grid.
//!
//! Everything downstream of ingestion works in projected meters so that the
//! distance between a vessel and a cell centroid is plain Euclidean distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius (IUGG), used for great-circle distances.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

pub const METERS_PER_NAUTICAL_MILE: f64 = 1852.0;

/// A point in projected (planar) meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_squared(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn lerp(&self, other: &Point, frac: f64) -> Point {
        Point {
            x: self.x + (other.x - self.x) * frac,
            y: self.y + (other.y - self.y) * frac,
        }
    }
}

/// A WGS84 longitude/latitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LonLat {
    pub lon: f64,
    pub lat: f64,
}

impl LonLat {
    pub const fn new(lon: f64, lat: f64) -> Self {
        Self { lon, lat }
    }

    /// Haversine distance on the mean sphere.
    pub fn great_circle_distance(&self, other: &LonLat) -> f64 {
        let (phi1, phi2) = (self.lat.to_radians(), other.lat.to_radians());
        let dphi = phi2 - phi1;
        let dlambda = (other.lon - self.lon).to_radians();
        let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
        2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
    }
}

/// Simple polygon with optional holes, in planar coordinates.
///
/// Rings may be given closed (first vertex repeated) or open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    exterior: Vec<Point>,
    holes: Vec<Vec<Point>>,
}

impl Polygon {
    pub fn new(exterior: Vec<Point>, holes: Vec<Vec<Point>>) -> Result<Self> {
        let exterior = open_ring(exterior)?;
        let holes = holes.into_iter().map(open_ring).collect::<Result<Vec<_>>>()?;
        Ok(Self { exterior, holes })
    }

    pub fn exterior(&self) -> &[Point] {
        &self.exterior
    }

    pub fn contains(&self, p: &Point) -> bool {
        ring_contains(&self.exterior, p) && !self.holes.iter().any(|h| ring_contains(h, p))
    }

    pub fn area(&self) -> f64 {
        ring_area(&self.exterior).abs() - self.holes.iter().map(|h| ring_area(h).abs()).sum::<f64>()
    }
}

fn open_ring(mut ring: Vec<Point>) -> Result<Vec<Point>> {
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    if ring.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "polygon ring needs at least 3 distinct vertices, got {}",
            ring.len()
        )));
    }
    if ring.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::InvalidInput("polygon vertex is not finite".into()));
    }
    Ok(ring)
}

// Even-odd ray casting.
fn ring_contains(ring: &[Point], p: &Point) -> bool {
    let mut inside = false;
    let mut j = ring.len() - 1;
    for i in 0..ring.len() {
        let (a, b) = (ring[i], ring[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn ring_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        / 2.0
}

#[derive(Debug, Clone, Copy)]
struct Ellipsoid {
    a: f64,
    inv_f: f64,
}

const WGS84: Ellipsoid = Ellipsoid {
    a: 6_378_137.0,
    inv_f: 298.257_223_563,
};

const GRS80: Ellipsoid = Ellipsoid {
    a: 6_378_137.0,
    inv_f: 298.257_222_101,
};

impl Ellipsoid {
    fn f(&self) -> f64 {
        1.0 / self.inv_f
    }

    fn e2(&self) -> f64 {
        let f = self.f();
        f * (2.0 - f)
    }
}

/// Supported metric projections, identified by EPSG code.
///
/// * `326zz` / `327zz`: WGS84 UTM zone `zz`, north / south.
/// * `258zz`: ETRS89 UTM zone `zz` (GRS80).
/// * `3035`: ETRS89 Lambert azimuthal equal-area (Europe).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    epsg: u32,
    kind: ProjectionKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ProjectionKind {
    TransverseMercator(TransverseMercator),
    Laea(Laea),
}

impl Projection {
    pub fn from_epsg(epsg: u32) -> Result<Self> {
        let kind = match epsg {
            32601..=32660 => ProjectionKind::TransverseMercator(TransverseMercator::utm(
                WGS84,
                epsg - 32600,
                true,
            )),
            32701..=32760 => ProjectionKind::TransverseMercator(TransverseMercator::utm(
                WGS84,
                epsg - 32700,
                false,
            )),
            25801..=25860 => ProjectionKind::TransverseMercator(TransverseMercator::utm(
                GRS80,
                epsg - 25800,
                true,
            )),
            3035 => ProjectionKind::Laea(Laea::new(GRS80, 52.0, 10.0, 4_321_000.0, 3_210_000.0)),
            other => return Err(Error::UnsupportedProjection(other)),
        };
        Ok(Self { epsg, kind })
    }

    /// UTM zone 33N, which covers the Adriatic basin.
    pub fn utm33n() -> Self {
        Self::from_epsg(32633).expect("32633 is supported")
    }

    pub fn epsg(&self) -> u32 {
        self.epsg
    }

    pub fn forward(&self, ll: LonLat) -> Point {
        match &self.kind {
            ProjectionKind::TransverseMercator(tm) => tm.forward(ll),
            ProjectionKind::Laea(l) => l.forward(ll),
        }
    }

    pub fn inverse(&self, p: Point) -> LonLat {
        match &self.kind {
            ProjectionKind::TransverseMercator(tm) => tm.inverse(p),
            ProjectionKind::Laea(l) => l.inverse(p),
        }
    }
}

/// Transverse Mercator using the 6th-order Krüger series.
#[derive(Debug, Clone, Copy, PartialEq)]
struct TransverseMercator {
    e: f64,
    k0_a: f64,
    lon0: f64,
    false_easting: f64,
    false_northing: f64,
    alpha: [f64; 6],
    beta: [f64; 6],
}

impl TransverseMercator {
    fn utm(ell: Ellipsoid, zone: u32, north: bool) -> Self {
        let lon0 = (zone as f64) * 6.0 - 183.0;
        let f = ell.f();
        let n = f / (2.0 - f);
        let (n2, n3) = (n * n, n * n * n);
        let (n4, n5, n6) = (n3 * n, n3 * n2, n3 * n3);
        let rectifying = ell.a / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0);
        let alpha = [
            n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0 + 41.0 * n4 / 180.0 - 127.0 * n5 / 288.0
                + 7891.0 * n6 / 37800.0,
            13.0 * n2 / 48.0 - 3.0 * n3 / 5.0 + 557.0 * n4 / 1440.0 + 281.0 * n5 / 630.0
                - 1983433.0 * n6 / 1935360.0,
            61.0 * n3 / 240.0 - 103.0 * n4 / 140.0 + 15061.0 * n5 / 26880.0
                + 167603.0 * n6 / 181440.0,
            49561.0 * n4 / 161280.0 - 179.0 * n5 / 168.0 + 6601661.0 * n6 / 7257600.0,
            34729.0 * n5 / 80640.0 - 3418889.0 * n6 / 1995840.0,
            212378941.0 * n6 / 319334400.0,
        ];
        let beta = [
            n / 2.0 - 2.0 * n2 / 3.0 + 37.0 * n3 / 96.0 - n4 / 360.0 - 81.0 * n5 / 512.0
                + 96199.0 * n6 / 604800.0,
            n2 / 48.0 + n3 / 15.0 - 437.0 * n4 / 1440.0 + 46.0 * n5 / 105.0
                - 1118711.0 * n6 / 3870720.0,
            17.0 * n3 / 480.0 - 37.0 * n4 / 840.0 - 209.0 * n5 / 4480.0 + 5569.0 * n6 / 90720.0,
            4397.0 * n4 / 161280.0 - 11.0 * n5 / 504.0 - 830251.0 * n6 / 7257600.0,
            4583.0 * n5 / 161280.0 - 108847.0 * n6 / 3991680.0,
            20648693.0 * n6 / 638668800.0,
        ];
        Self {
            e: ell.e2().sqrt(),
            k0_a: 0.9996 * rectifying,
            lon0,
            false_easting: 500_000.0,
            false_northing: if north { 0.0 } else { 10_000_000.0 },
            alpha,
            beta,
        }
    }

    fn forward(&self, ll: LonLat) -> Point {
        let phi = ll.lat.to_radians();
        let lambda = (ll.lon - self.lon0).to_radians();
        let sin_phi = phi.sin();
        let t = (sin_phi.atanh() - self.e * (self.e * sin_phi).atanh()).sinh();
        let xi_p = t.atan2(lambda.cos());
        let eta_p = (lambda.sin() / (1.0 + t * t).sqrt()).atanh();
        let mut xi = xi_p;
        let mut eta = eta_p;
        for (j, a) in self.alpha.iter().enumerate() {
            let k = 2.0 * (j as f64 + 1.0);
            xi += a * (k * xi_p).sin() * (k * eta_p).cosh();
            eta += a * (k * xi_p).cos() * (k * eta_p).sinh();
        }
        Point::new(
            self.false_easting + self.k0_a * eta,
            self.false_northing + self.k0_a * xi,
        )
    }

    fn inverse(&self, p: Point) -> LonLat {
        let xi = (p.y - self.false_northing) / self.k0_a;
        let eta = (p.x - self.false_easting) / self.k0_a;
        let mut xi_p = xi;
        let mut eta_p = eta;
        for (j, b) in self.beta.iter().enumerate() {
            let k = 2.0 * (j as f64 + 1.0);
            xi_p -= b * (k * xi).sin() * (k * eta).cosh();
            eta_p -= b * (k * xi).cos() * (k * eta).sinh();
        }
        let lambda = eta_p.sinh().atan2(xi_p.cos());
        // conformal latitude, then Newton on tau = tan(phi)
        let tau_p = xi_p.sin() / (eta_p.sinh().powi(2) + xi_p.cos().powi(2)).sqrt();
        let e2 = self.e * self.e;
        let mut tau = tau_p;
        for _ in 0..8 {
            let sigma = (self.e * (self.e * tau / (1.0 + tau * tau).sqrt()).atanh()).sinh();
            let tau_i = tau * (1.0 + sigma * sigma).sqrt() - sigma * (1.0 + tau * tau).sqrt();
            let d = (tau_p - tau_i) / (1.0 + tau_i * tau_i).sqrt()
                * (1.0 + (1.0 - e2) * tau * tau)
                / ((1.0 - e2) * (1.0 + tau * tau).sqrt());
            tau += d;
            if d.abs() < 1e-14 {
                break;
            }
        }
        LonLat::new(self.lon0 + lambda.to_degrees(), tau.atan().to_degrees())
    }
}

/// Ellipsoidal Lambert azimuthal equal-area.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Laea {
    e: f64,
    lon0: f64,
    false_easting: f64,
    false_northing: f64,
    qp: f64,
    rq: f64,
    d: f64,
    sin_beta0: f64,
    cos_beta0: f64,
}

impl Laea {
    fn new(ell: Ellipsoid, lat0: f64, lon0: f64, false_easting: f64, false_northing: f64) -> Self {
        let e = ell.e2().sqrt();
        let qp = authalic_q(e, 1.0);
        let phi0 = lat0.to_radians();
        let beta0 = (authalic_q(e, phi0.sin()) / qp).asin();
        let rq = ell.a * (qp / 2.0).sqrt();
        let d = ell.a * (phi0.cos() / (1.0 - e * e * phi0.sin().powi(2)).sqrt())
            / (rq * beta0.cos());
        Self {
            e,
            lon0,
            false_easting,
            false_northing,
            qp,
            rq,
            d,
            sin_beta0: beta0.sin(),
            cos_beta0: beta0.cos(),
        }
    }

    fn forward(&self, ll: LonLat) -> Point {
        let phi = ll.lat.to_radians();
        let dl = (ll.lon - self.lon0).to_radians();
        let beta = (authalic_q(self.e, phi.sin()) / self.qp).clamp(-1.0, 1.0).asin();
        let b = self.rq
            * (2.0 / (1.0 + self.sin_beta0 * beta.sin() + self.cos_beta0 * beta.cos() * dl.cos()))
                .sqrt();
        Point::new(
            self.false_easting + b * self.d * beta.cos() * dl.sin(),
            self.false_northing
                + (b / self.d)
                    * (self.cos_beta0 * beta.sin() - self.sin_beta0 * beta.cos() * dl.cos()),
        )
    }

    fn inverse(&self, p: Point) -> LonLat {
        let de = p.x - self.false_easting;
        let dn = p.y - self.false_northing;
        let rho = ((de / self.d).powi(2) + (self.d * dn).powi(2)).sqrt();
        if rho < 1e-12 {
            let lat0 = self.lat_from_beta(self.sin_beta0.asin());
            return LonLat::new(self.lon0, lat0);
        }
        let c = 2.0 * (rho / (2.0 * self.rq)).asin();
        let beta = (c.cos() * self.sin_beta0 + self.d * dn * c.sin() * self.cos_beta0 / rho).asin();
        let lambda = (de * c.sin()).atan2(
            self.d * rho * self.cos_beta0 * c.cos() - self.d * self.d * dn * self.sin_beta0 * c.sin(),
        );
        LonLat::new(self.lon0 + lambda.to_degrees(), self.lat_from_beta(beta))
    }

    fn lat_from_beta(&self, beta: f64) -> f64 {
        let e2 = self.e * self.e;
        let (e4, e6) = (e2 * e2, e2 * e2 * e2);
        let phi = beta
            + (e2 / 3.0 + 31.0 * e4 / 180.0 + 517.0 * e6 / 5040.0) * (2.0 * beta).sin()
            + (23.0 * e4 / 360.0 + 251.0 * e6 / 3780.0) * (4.0 * beta).sin()
            + (761.0 * e6 / 45360.0) * (6.0 * beta).sin();
        phi.to_degrees()
    }
}

fn authalic_q(e: f64, sin_phi: f64) -> f64 {
    let e2 = e * e;
    let es = e * sin_phi;
    (1.0 - e2) * (sin_phi / (1.0 - es * es) - (1.0 / (2.0 * e)) * ((1.0 - es) / (1.0 + es)).ln())
}
