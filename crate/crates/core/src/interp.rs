//! Bilinear resampling: rotation into a direction-aligned frame and resizing.

use ndarray::Array2;

/// Bilinear sample with zero outside the grid.
pub fn bilinear(img: &Array2<f64>, fx: f64, fy: f64) -> f64 {
    let (nx, ny) = img.dim();
    if !(fx > -1.0 && fy > -1.0 && fx < nx as f64 && fy < ny as f64) {
        return 0.0;
    }
    let x0 = fx.floor();
    let y0 = fy.floor();
    let ax = fx - x0;
    let ay = fy - y0;
    let x0 = x0 as isize;
    let y0 = y0 as isize;
    let get = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= nx as isize || y >= ny as isize {
            0.0
        } else {
            img[[x as usize, y as usize]]
        }
    };
    let mut v = 0.0;
    // skip zero-weight taps so exact grid positions reproduce samples bit-exactly
    if ax < 1.0 && ay < 1.0 {
        v += (1.0 - ax) * (1.0 - ay) * get(x0, y0);
    }
    if ax > 0.0 && ay < 1.0 {
        v += ax * (1.0 - ay) * get(x0 + 1, y0);
    }
    if ax < 1.0 && ay > 0.0 {
        v += (1.0 - ax) * ay * get(x0, y0 + 1);
    }
    if ax > 0.0 && ay > 0.0 {
        v += ax * ay * get(x0 + 1, y0 + 1);
    }
    v
}

/// Bilinear sample that replicates edge pixels up to `margin` pixels outside
/// the grid and is zero beyond.
fn bilinear_fringe(img: &Array2<f64>, fx: f64, fy: f64, margin: f64) -> f64 {
    let (nx, ny) = img.dim();
    let (hx, hy) = ((nx - 1) as f64, (ny - 1) as f64);
    if fx < -margin || fy < -margin || fx > hx + margin || fy > hy + margin {
        return 0.0;
    }
    bilinear(img, fx.clamp(0.0, hx), fy.clamp(0.0, hy))
}

/// A square canvas whose first axis points along a lateral direction.
///
/// Canvas pixel `(a, b)` sits at image position
/// `centre + (a - ca) * (cos b, sin b) + (b - cb) * (-sin b, cos b)`
/// for direction angle `b`, measured from the `ix` axis towards `iy`.
/// The canvas is large enough to hold the whole image at any angle.
#[derive(Debug, Clone, Copy)]
pub struct DirectionalFrame {
    cos: f64,
    sin: f64,
    image_dims: (usize, usize),
    canvas: (usize, usize),
}

impl DirectionalFrame {
    pub fn new(angle: f64, image_dims: (usize, usize)) -> Self {
        let (nx, ny) = image_dims;
        let diag = ((nx * nx + ny * ny) as f64).sqrt();
        let side = diag.ceil() as usize + 2;
        // keep parity with the image so axis-aligned frames land on pixel centres
        let fit = |n: usize| if side % 2 == n % 2 { side } else { side + 1 };
        let canvas = (fit(nx), fit(ny));
        Self {
            cos: angle.cos(),
            sin: angle.sin(),
            image_dims,
            canvas,
        }
    }

    pub fn canvas_dims(&self) -> (usize, usize) {
        self.canvas
    }

    fn centres(&self) -> (f64, f64, f64, f64) {
        let (nx, ny) = self.image_dims;
        (
            (nx as f64 - 1.0) / 2.0,
            (ny as f64 - 1.0) / 2.0,
            (self.canvas.0 as f64 - 1.0) / 2.0,
            (self.canvas.1 as f64 - 1.0) / 2.0,
        )
    }

    /// Resample the image onto the canvas.
    pub fn to_canvas(&self, img: &Array2<f64>) -> Array2<f64> {
        let (cx, cy, ca, cb) = self.centres();
        Array2::from_shape_fn(self.canvas_dims(), |(a, b)| {
            let da = a as f64 - ca;
            let db = b as f64 - cb;
            let fx = cx + da * self.cos - db * self.sin;
            let fy = cy + da * self.sin + db * self.cos;
            bilinear_fringe(img, fx, fy, 1.5)
        })
    }

    /// Resample a canvas back onto the image grid.
    pub fn from_canvas(&self, canvas: &Array2<f64>) -> Array2<f64> {
        let (cx, cy, ca, cb) = self.centres();
        Array2::from_shape_fn(self.image_dims, |(ix, iy)| {
            let px = ix as f64 - cx;
            let py = iy as f64 - cy;
            let a = ca + px * self.cos + py * self.sin;
            let b = cb - px * self.sin + py * self.cos;
            bilinear(canvas, a, b)
        })
    }
}

/// Rotate an image about its centre by `angle` (radians, `ix` towards `iy`),
/// keeping its dimensions and zero-filling uncovered pixels.
pub fn rotate(img: &Array2<f64>, angle: f64) -> Array2<f64> {
    let (nx, ny) = img.dim();
    let cx = (nx as f64 - 1.0) / 2.0;
    let cy = (ny as f64 - 1.0) / 2.0;
    let (s, c) = angle.sin_cos();
    Array2::from_shape_fn((nx, ny), |(ix, iy)| {
        let px = ix as f64 - cx;
        let py = iy as f64 - cy;
        // inverse map: rotate the output position by -angle
        bilinear(img, cx + px * c + py * s, cy - px * s + py * c)
    })
}

/// Bilinear resize to `dims`, sampling at pixel centres with edge clamping.
pub fn resize(img: &Array2<f64>, dims: (usize, usize)) -> Array2<f64> {
    let (nx, ny) = img.dim();
    let sx = nx as f64 / dims.0 as f64;
    let sy = ny as f64 / dims.1 as f64;
    Array2::from_shape_fn(dims, |(i, j)| {
        let fx = ((i as f64 + 0.5) * sx - 0.5).clamp(0.0, (nx - 1) as f64);
        let fy = ((j as f64 + 0.5) * sy - 0.5).clamp(0.0, (ny - 1) as f64);
        bilinear(img, fx, fy)
    })
}
