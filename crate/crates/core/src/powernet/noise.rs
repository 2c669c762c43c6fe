use super::PowernetError;

/// Nodes and weights of 8-point Gauss-Legendre quadrature on [-1, 1].
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// Panels per standard deviation in the convolution quadrature.
const PANELS_PER_SIGMA: f64 = 1.0;
/// Density beyond this many standard deviations is ignored (below 1e-22).
const TAIL_SIGMAS: f64 = 10.0;

/// Standard normal CDF through `libm::erfc`, accurate to a few ulp.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedGaussian {
    pub mu: f64,
    pub sigma: f64,
    pub lo: f64,
    pub hi: f64,
}

impl TruncatedGaussian {
    pub fn new(mu: f64, sigma: f64, lo: f64, hi: f64) -> Result<Self, PowernetError> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(PowernetError::Parameter(format!("sigma must be positive, got {sigma}")));
        }
        if !(lo < hi) || !mu.is_finite() {
            return Err(PowernetError::Parameter(format!("empty support [{lo}, {hi}]")));
        }
        let t = Self { mu, sigma, lo, hi };
        if !(t.mass() > 0.0) {
            return Err(PowernetError::Parameter(format!(
                "support [{lo}, {hi}] carries no mass for mean {mu}"
            )));
        }
        Ok(t)
    }

    fn mass(&self) -> f64 {
        std_normal_cdf((self.hi - self.mu) / self.sigma) - std_normal_cdf((self.lo - self.mu) / self.sigma)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        let base = std_normal_cdf((self.lo - self.mu) / self.sigma);
        ((std_normal_cdf((x - self.mu) / self.sigma) - base) / self.mass()).clamp(0.0, 1.0)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            return 0.0;
        }
        std_normal_pdf((x - self.mu) / self.sigma) / (self.sigma * self.mass())
    }

    /// Interval outside of which the density is negligible.
    fn effective_support(&self) -> (f64, f64) {
        (
            self.lo.max(self.mu - TAIL_SIGMAS * self.sigma),
            self.hi.min(self.mu + TAIL_SIGMAS * self.sigma),
        )
    }
}

pub fn truncated_gaussian_cdf(mu: f64, sigma: f64, lo: f64, hi: f64, x: f64) -> Result<f64, PowernetError> {
    Ok(TruncatedGaussian::new(mu, sigma, lo, hi)?.cdf(x))
}

/// CDF of `r - d` for independent truncated Gaussians `r` and `d`:
/// `P(r - d <= z) = E[F_r(z + d)]`, the expectation taken by composite
/// Gauss-Legendre quadrature over the effective support of `d`. Weights are
/// positive, so the result is monotone in `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceCdf {
    r: TruncatedGaussian,
    nodes: Vec<(f64, f64)>,
}

impl DifferenceCdf {
    pub fn new(r: TruncatedGaussian, d: TruncatedGaussian) -> Self {
        let (a, b) = d.effective_support();
        let panels = (((b - a) / d.sigma) * PANELS_PER_SIGMA).ceil().max(1.0) as usize;
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * GL8.len());
        for k in 0..panels {
            let mid = a + (k as f64 + 0.5) * h;
            for &(t, w) in &GL8 {
                let s = mid + 0.5 * h * t;
                nodes.push((s, 0.5 * h * w * d.pdf(s)));
            }
        }
        let total: f64 = nodes.iter().map(|n| n.1).sum();
        for n in &mut nodes {
            n.1 /= total;
        }
        Self { r, nodes }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        self.nodes
            .iter()
            .map(|&(s, w)| w * self.r.cdf(z + s))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }
}
