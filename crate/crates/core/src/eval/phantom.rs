use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// One ellipse of the phantom: intensity, semi-axes, center and rotation in degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipse {
    pub intensity: f64,
    pub a: f64,
    pub b: f64,
    pub x0: f64,
    pub y0: f64,
    pub phi_deg: f64,
}

impl Ellipse {
    const fn new(intensity: f64, a: f64, b: f64, x0: f64, y0: f64, phi_deg: f64) -> Self {
        Ellipse {
            intensity,
            a,
            b,
            x0,
            y0,
            phi_deg,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (sin, cos) = self.phi_deg.to_radians().sin_cos();
        let (dx, dy) = (x - self.x0, y - self.y0);
        let u = dx * cos + dy * sin;
        let v = -dx * sin + dy * cos;
        (u / self.a).powi(2) + (v / self.b).powi(2) <= 1.0
    }
}

/// Modified (high-contrast) Shepp-Logan ellipses on the `[-1, 1]²` square.
pub const MODIFIED_SHEPP_LOGAN: [Ellipse; 10] = [
    Ellipse::new(1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    Ellipse::new(-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0),
    Ellipse::new(-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0),
    Ellipse::new(-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0),
    Ellipse::new(0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0),
    Ellipse::new(0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0),
    Ellipse::new(0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0),
    Ellipse::new(0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0),
    Ellipse::new(0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0),
    Ellipse::new(0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0),
];

/// Pixel-center coordinates of entry `(i, j)` in an `n × n` image; `y` points up.
fn pixel_center(i: usize, j: usize, n: usize) -> (f64, f64) {
    let n_f = n as f64;
    let x = (2.0 * j as f64 + 1.0 - n_f) / n_f;
    let y = -(2.0 * i as f64 + 1.0 - n_f) / n_f;
    (x, y)
}

/// `size × size` modified Shepp-Logan phantom with values in `[0, 1]`.
///
/// Each pixel holds the summed intensity of the ellipses covering its center.
pub fn shepp_logan(size: usize) -> Result<Matrix> {
    if size < 16 {
        return Err(Error::InvalidArgument(format!(
            "phantom size must be at least 16, got {size}"
        )));
    }
    Ok(Matrix::from_fn(size, size, |i, j| {
        let (x, y) = pixel_center(i, j, size);
        MODIFIED_SHEPP_LOGAN
            .iter()
            .filter(|e| e.contains(x, y))
            .map(|e| e.intensity)
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }))
}
