//! Exponential-bump smoothstep, flat to all orders at both ends.

/// `exp(-1/u)` and its first two derivatives; identically zero for `u <= 0`.
fn flat_ramp(u: f64) -> [f64; 3] {
    if u <= 0.0 {
        return [0.0; 3];
    }
    let h = (-1.0 / u).exp();
    let u2 = u * u;
    [h, h / u2, h * (1.0 - 2.0 * u) / (u2 * u2)]
}

/// A C^∞ step from 0 (for `x <= start`) to 1 (for `x >= end`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothStep {
    start: f64,
    end: f64,
}

impl SmoothStep {
    pub fn new(start: f64, end: f64) -> Self {
        assert!(end > start, "smoothstep needs end > start");
        Self { start, end }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    /// Value and first two derivatives with respect to `x`.
    pub fn jet(&self, x: f64) -> [f64; 3] {
        if x <= self.start {
            return [0.0; 3];
        }
        if x >= self.end {
            return [1.0, 0.0, 0.0];
        }
        let w = self.end - self.start;
        let u = (x - self.start) / w;
        let [a, a1, a2] = flat_ramp(u);
        let [b, b1, b2] = flat_ramp(1.0 - u);
        // d/du of b(1-u) flips the sign of the odd derivative.
        let b1 = -b1;
        let s = a + b;
        let s1 = a1 + b1;
        let s2 = a2 + b2;
        let v = a / s;
        let d1 = (a1 * s - a * s1) / (s * s);
        let d2 = (a2 * s - a * s2) / (s * s) - 2.0 * s1 * d1 / s;
        [v, d1 / w, d2 / (w * w)]
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet(x)[0]
    }
}
