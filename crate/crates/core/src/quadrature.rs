//! Gauss–Legendre rules and an adaptive composite integrator.

use crate::scalar::Real;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Builds the `n`-point rule by Newton iteration on `P_n` (done in `f64`).
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre order must be positive");
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self {
            nodes: nodes.into_iter().map(T::lit).collect(),
            weights: weights.into_iter().map(T::lit).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// `∫_a^b f`, propagating the first integrand error.
    pub fn integrate<E, F>(&self, a: T, b: T, mut f: F) -> Result<T, E>
    where
        F: FnMut(T) -> Result<T, E>,
    {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        let mut acc = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + *w * f(mid + half * *x)?;
        }
        Ok(acc * half)
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Clone, Copy, Debug)]
pub struct AdaptiveOptions<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    /// Upper bound on the number of bisections.
    pub max_subdivisions: usize,
    /// Equal pieces each breakpoint interval is cut into before refinement.
    pub initial_panels: usize,
    /// Bisections allowed without halving the error estimate before giving up.
    pub plateau_splits: usize,
}

impl<T: Real> Default for AdaptiveOptions<T> {
    fn default() -> Self {
        Self { rel_tol: T::lit(1e-10), abs_tol: T::zero(), max_subdivisions: 2000, initial_panels: 1, plateau_splits: 48 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adaptive<T> {
    pub value: T,
    /// Sum of `|I_high − I_low|` over the final panels.
    pub error: T,
    pub evaluations: usize,
    pub panels: usize,
    /// True when the subdivision budget ran out before the tolerance was met.
    pub exhausted: bool,
    /// True when refinement stopped because the error estimate had plateaued,
    /// the signature of rounding noise in the integrand.
    pub noise_limited: bool,
}

/// Paired `n`- and `2n+1`-point rules; the high-order value is kept and the
/// difference is the panel error estimate. The odd rule puts a node at the
/// panel centre so a jump near the midpoint cannot fool both rules at once.
#[derive(Clone, Debug)]
pub struct PanelRule<T> {
    low: GaussLegendre<T>,
    high: GaussLegendre<T>,
}

impl<T: Real> Default for PanelRule<T> {
    fn default() -> Self {
        Self::new(8)
    }
}

#[derive(Clone, Copy)]
struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PanelRule<T> {
    pub fn new(order: usize) -> Self {
        Self { low: GaussLegendre::new(order), high: GaussLegendre::new(2 * order + 1) }
    }

    pub fn order(&self) -> usize {
        self.low.order()
    }

    fn panel<E, F>(&self, a: T, b: T, f: &mut F) -> Result<Panel<T>, E>
    where
        F: FnMut(T) -> Result<T, E>,
    {
        let lo = self.low.integrate(a, b, &mut *f)?;
        let hi = self.high.integrate(a, b, &mut *f)?;
        Ok(Panel { a, b, value: hi, error: (hi - lo).abs() })
    }

    /// Adaptive composite integration over consecutive `points` (sorted).
    ///
    /// Repeatedly bisects the panel with the largest error estimate until the
    /// summed estimate drops below `max(abs_tol, rel_tol · Σ|I_panel|)`.
    /// Refinement also stops once `plateau_splits` consecutive bisections have
    /// failed to halve the summed estimate: singularities, kinks and jumps keep
    /// shrinking under bisection while rounding noise does not.
    /// Ties go to the leftmost panel and the final sum runs left to right, so the
    /// result is deterministic.
    pub fn integrate<E, F>(&self, points: &[T], opts: &AdaptiveOptions<T>, mut f: F) -> Result<Adaptive<T>, E>
    where
        F: FnMut(T) -> Result<T, E>,
    {
        let mut out =
            Adaptive { value: T::zero(), error: T::zero(), evaluations: 0, panels: 0, exhausted: false, noise_limited: false };
        let per_panel = 3 * self.order() + 1;
        let pieces = opts.initial_panels.max(1);
        let mut panels: Vec<Panel<T>> = Vec::new();
        for w in points.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a == b {
                continue;
            }
            let step = (b - a) / T::from_count(pieces);
            for j in 0..pieces {
                let pa = a + step * T::from_count(j);
                let pb = if j + 1 == pieces { b } else { a + step * T::from_count(j + 1) };
                panels.push(self.panel(pa, pb, &mut f)?);
                out.evaluations += per_panel;
            }
        }
        let mut splits = 0;
        let (mut mark, mut mark_split) = (T::infinity(), 0);
        loop {
            let scale = panels.iter().fold(T::zero(), |s, p| s + p.value.abs());
            let err = panels.iter().fold(T::zero(), |s, p| s + p.error);
            let tol = opts.abs_tol.max(opts.rel_tol * scale);
            if err <= tol || panels.is_empty() {
                break;
            }
            if err <= mark * T::lit(0.5) {
                mark = err;
                mark_split = splits;
            } else if splits - mark_split >= opts.plateau_splits {
                out.noise_limited = true;
                break;
            }
            if splits >= opts.max_subdivisions {
                out.exhausted = true;
                break;
            }
            let mut worst = 0;
            for (i, p) in panels.iter().enumerate() {
                if p.error > panels[worst].error {
                    worst = i;
                }
            }
            let p = panels[worst];
            let m = (p.a + p.b) * T::lit(0.5);
            if m <= p.a.min(p.b) || m >= p.a.max(p.b) {
                // interval below resolution
                out.exhausted = true;
                break;
            }
            let left = self.panel(p.a, m, &mut f)?;
            let right = self.panel(m, p.b, &mut f)?;
            out.evaluations += 2 * per_panel;
            panels[worst] = left;
            panels.insert(worst + 1, right);
            splits += 1;
        }
        for p in &panels {
            out.value = out.value + p.value;
            out.error = out.error + p.error;
        }
        out.panels = panels.len();
        Ok(out)
    }
}
