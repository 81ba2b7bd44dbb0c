use crate::airspace::{Advisory, VerticalState};
use crate::{Error, Result, FPM};

/// Rectilinear discretization of the vertical MDP state space.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    h: Vec<f64>,
    hdot0: Vec<f64>,
    hdot1: Vec<f64>,
    advisories: Vec<Advisory>,
    tau_max: u32,
}

/// Up to eight grid vertices with multilinear weights; zero weights are
/// omitted.
#[derive(Debug, Clone, Copy)]
pub struct Corners {
    idx: [usize; 8],
    w: [f64; 8],
    len: usize,
}

impl Corners {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.idx[..self.len].iter().copied().zip(self.w[..self.len].iter().copied())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Lower vertex index and weight of the upper vertex, after clamping `x`
/// to the axis range.
fn bracket(cuts: &[f64], x: f64) -> (usize, f64) {
    let last = cuts.len() - 1;
    if last == 0 || x <= cuts[0] {
        return (0, 0.0);
    }
    if x >= cuts[last] {
        return (last, 0.0);
    }
    let hi = cuts.partition_point(|c| *c <= x);
    let lo = hi - 1;
    (lo, (x - cuts[lo]) / (cuts[hi] - cuts[lo]))
}

fn check_axis(name: &str, cuts: &[f64]) -> Result<()> {
    if cuts.is_empty() {
        return Err(Error::InvalidGrid(format!("{name} axis is empty")));
    }
    if cuts.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidGrid(format!("{name} axis has non-finite cut points")));
    }
    if cuts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGrid(format!("{name} cut points must be strictly increasing")));
    }
    Ok(())
}

fn find_cut(cuts: &[f64], x: f64) -> Option<usize> {
    cuts.iter().position(|c| (c - x).abs() <= 1e-9 * c.abs().max(1.0))
}

impl Default for Grid {
    /// 33 altitude points within ±4000 ft (denser near zero), 13 rate points
    /// within ±2500 ft/min, τ from 0 to 40 s and all seven advisories.
    fn default() -> Self {
        let pos = [
            50.0, 100.0, 150.0, 200.0, 300.0, 400.0, 500.0, 600.0, 800.0, 1000.0, 1250.0, 1500.0, 2000.0, 2500.0,
            3000.0, 4000.0,
        ];
        let rates_fpm = [250.0, 500.0, 1000.0, 1500.0, 2000.0, 2500.0];
        let h = symmetric(&pos);
        let rates: Vec<f64> = symmetric(&rates_fpm).into_iter().map(|r| r * FPM).collect();
        Grid::new(h, rates.clone(), rates, Advisory::ALL.to_vec(), 40).expect("default grid is valid")
    }
}

fn symmetric(pos: &[f64]) -> Vec<f64> {
    pos.iter().rev().map(|p| -p).chain(std::iter::once(0.0)).chain(pos.iter().copied()).collect()
}

impl Grid {
    pub fn new(h: Vec<f64>, hdot0: Vec<f64>, hdot1: Vec<f64>, advisories: Vec<Advisory>, tau_max: u32) -> Result<Self> {
        check_axis("h", &h)?;
        check_axis("hdot0", &hdot0)?;
        check_axis("hdot1", &hdot1)?;
        let n = h.len();
        if (0..n).any(|i| (h[i] + h[n - 1 - i]).abs() > 1e-9 * h[i].abs().max(1.0)) {
            return Err(Error::InvalidGrid("h cut points must be symmetric about zero".into()));
        }
        if !advisories.contains(&Advisory::Coc) {
            return Err(Error::InvalidGrid("advisory axis must contain COC".into()));
        }
        let mut sorted = advisories.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != advisories.len() {
            return Err(Error::InvalidGrid("advisory axis has duplicates".into()));
        }
        Ok(Self { h, hdot0, hdot1, advisories, tau_max })
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn hdot0(&self) -> &[f64] {
        &self.hdot0
    }

    pub fn hdot1(&self) -> &[f64] {
        &self.hdot1
    }

    pub fn advisories(&self) -> &[Advisory] {
        &self.advisories
    }

    pub fn tau_max(&self) -> u32 {
        self.tau_max
    }

    pub fn advisory_index(&self, a: Advisory) -> Option<usize> {
        self.advisories.iter().position(|x| *x == a)
    }

    /// Number of `(h, hdot0, hdot1)` vertices.
    pub fn kinematic_len(&self) -> usize {
        self.h.len() * self.hdot0.len() * self.hdot1.len()
    }

    pub fn kinematic_index(&self, ih: usize, i0: usize, i1: usize) -> usize {
        (ih * self.hdot0.len() + i0) * self.hdot1.len() + i1
    }

    pub fn kinematic_vertex(&self, k: usize) -> [f64; 3] {
        let n1 = self.hdot1.len();
        let n0 = self.hdot0.len();
        [self.h[k / (n0 * n1)], self.hdot0[(k / n1) % n0], self.hdot1[k % n1]]
    }

    /// States per τ layer.
    pub fn layer_len(&self) -> usize {
        self.advisories.len() * self.kinematic_len()
    }

    pub fn num_states(&self) -> usize {
        self.layer_len() * (self.tau_max as usize + 1)
    }

    pub fn state_index(&self, tau: u32, ia_prev: usize, k: usize) -> usize {
        (tau as usize * self.advisories.len() + ia_prev) * self.kinematic_len() + k
    }

    /// `(τ, a_prev index, h index, hdot0 index, hdot1 index)`.
    pub fn decode(&self, index: usize) -> (u32, usize, usize, usize, usize) {
        let n_kin = self.kinematic_len();
        let k = index % n_kin;
        let rest = index / n_kin;
        let ia = rest % self.advisories.len();
        let tau = (rest / self.advisories.len()) as u32;
        let n1 = self.hdot1.len();
        let n0 = self.hdot0.len();
        (tau, ia, k / (n0 * n1), (k / n1) % n0, k % n1)
    }

    pub fn vertex(&self, index: usize) -> VerticalState {
        let (tau, ia, ih, i0, i1) = self.decode(index);
        VerticalState::new(self.h[ih], self.hdot0[i0], self.hdot1[i1], self.advisories[ia], tau)
    }

    /// Index of the grid vertex equal to `s`, if `s` lies on one.
    pub fn vertex_index(&self, s: &VerticalState) -> Option<usize> {
        if s.tau > self.tau_max {
            return None;
        }
        let k = self.kinematic_index(
            find_cut(&self.h, s.h)?,
            find_cut(&self.hdot0, s.hdot0)?,
            find_cut(&self.hdot1, s.hdot1)?,
        );
        Some(self.state_index(s.tau, self.advisory_index(s.a_prev)?, k))
    }

    pub(crate) fn find_rates(&self, hdot0: f64, hdot1: f64) -> Option<(usize, usize)> {
        Some((find_cut(&self.hdot0, hdot0)?, find_cut(&self.hdot1, hdot1)?))
    }

    /// Multilinear interpolation weights of `(h, hdot0, hdot1)` over the
    /// enclosing kinematic vertices, clamped to the grid hull.
    pub fn corners(&self, h: f64, hdot0: f64, hdot1: f64) -> Corners {
        let axes = [bracket(&self.h, h), bracket(&self.hdot0, hdot0), bracket(&self.hdot1, hdot1)];
        let mut out = Corners { idx: [0; 8], w: [0.0; 8], len: 0 };
        for bits in 0..8u8 {
            let mut w = 1.0;
            let mut pos = [0usize; 3];
            for (d, &(lo, t)) in axes.iter().enumerate() {
                if bits >> d & 1 == 1 {
                    w *= t;
                    pos[d] = lo + 1;
                } else {
                    w *= 1.0 - t;
                    pos[d] = lo;
                }
            }
            if w != 0.0 {
                out.idx[out.len] = self.kinematic_index(pos[0], pos[1], pos[2]);
                out.w[out.len] = w;
                out.len += 1;
            }
        }
        out
    }
}
