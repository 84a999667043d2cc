//! Finite cost spaces `(X, d)` with cost `c(x, y) = d(x, y)^q`.
//!
//! Points are dense indices `0..len()`. Grid and torus points use row-major
//! encoding: the last coordinate varies fastest, so the point with
//! coordinates `(a_0, ..., a_{n-1})` on an axis of `k` values has index
//! `sum_j a_j * k^(n-1-j)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::seed::{fnv1a64, mix64};

/// Tolerance for symmetry and triangle-inequality checks of explicit matrices.
pub const METRIC_TOLERANCE: f64 = 1e-9;

/// Largest number of points a formula-backed space may have.
pub const MAX_POINTS: usize = 1 << 24;

/// The kind of a [`CostSpace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceKind {
    /// Arbitrary symmetric distance matrix.
    ExplicitMetric,
    /// `d(x, y) = 1{x != y}` on `size` points.
    DiscreteMetric,
    /// `[0..s]^n` with the `l_p` distance.
    LpGrid,
    /// `[0..2s]^n` with the `l_p` distance modulo `2s + 1`.
    LpTorus,
    /// Points of `[0, 1)` with `d(x, y) = min{|x - y|, 1 - |x - y|}`.
    Circle,
    /// Points of the real line with `d(x, y) = |x - y|`.
    Line,
}

impl SpaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::ExplicitMetric => "explicit-metric",
            SpaceKind::DiscreteMetric => "discrete-metric",
            SpaceKind::LpGrid => "lp-grid",
            SpaceKind::LpTorus => "lp-torus",
            SpaceKind::Circle => "circle",
            SpaceKind::Line => "line",
        }
    }
}

/// Human-facing label of a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointLabel {
    Index(usize),
    Lattice(Vec<i64>),
    Real(f64),
}

impl std::fmt::Display for PointLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PointLabel::Index(i) => write!(f, "{i}"),
            PointLabel::Lattice(v) => {
                let parts: Vec<String> = v.iter().map(|c| c.to_string()).collect();
                write!(f, "{}", parts.join(" "))
            }
            PointLabel::Real(x) => write!(f, "{x}"),
        }
    }
}

/// Parameters of a grid or torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams {
    /// Dimension.
    pub n: usize,
    /// Side: the grid is `[0..s]^n`, the torus `[0..2s]^n`.
    pub s: usize,
    /// Norm index in `[1, inf]`.
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Geometry {
    Explicit {
        size: usize,
        dist: Vec<f64>,
        metric: bool,
    },
    Discrete {
        size: usize,
    },
    Grid(GridParams),
    Torus(GridParams),
    Circle {
        pos: Vec<f64>,
    },
    Line {
        pos: Vec<f64>,
    },
}

/// A validated finite space with cost `c = d^q`.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpace {
    kind: SpaceKind,
    q: f64,
    geometry: Geometry,
    len: usize,
    min_dist: f64,
    max_dist: f64,
    fingerprint: u64,
}

/// Serialized form of a space, as read from a space file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSpace {
    pub kind: SpaceKind,
    #[serde(default = "default_q")]
    pub q: f64,
    /// Distance matrix for `explicit-metric`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<Vec<Vec<f64>>>,
    /// Accept symmetric non-metric matrices for `explicit-metric`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub non_metric: bool,
    /// Number of points for `discrete-metric`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    /// Norm index; `null` or absent with a grid kind means 2, a string "inf" means infinity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<PIndex>,
    /// Point positions for `circle` and `line`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<f64>>,
}

/// Norm index as written in a space file: a number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PIndex {
    Finite(f64),
    Named(InfName),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InfName {
    #[serde(rename = "inf")]
    Inf,
}

impl PIndex {
    pub fn value(self) -> f64 {
        match self {
            PIndex::Finite(p) => p,
            PIndex::Named(InfName::Inf) => f64::INFINITY,
        }
    }

    pub fn from_value(p: f64) -> Self {
        if p.is_infinite() {
            PIndex::Named(InfName::Inf)
        } else {
            PIndex::Finite(p)
        }
    }
}

fn default_q() -> f64 {
    1.0
}

/// Validates a raw space description.
pub fn validate_space(raw: &RawSpace) -> Result<CostSpace> {
    let need = |name: &'static str, v: Option<usize>| {
        v.ok_or_else(|| invalid(name, format!("required for kind {}", raw.kind.name())))
    };
    let p = raw.p.map(PIndex::value).unwrap_or(2.0);
    match raw.kind {
        SpaceKind::ExplicitMetric => {
            let dist = raw
                .dist
                .as_ref()
                .ok_or_else(|| invalid("dist", "required for kind explicit-metric"))?;
            CostSpace::explicit(dist, raw.q, !raw.non_metric)
        }
        SpaceKind::DiscreteMetric => CostSpace::discrete(need("size", raw.size)?, raw.q),
        SpaceKind::LpGrid => CostSpace::lp_grid(need("n", raw.n)?, need("s", raw.s)?, p, raw.q),
        SpaceKind::LpTorus => CostSpace::lp_torus(need("n", raw.n)?, need("s", raw.s)?, p, raw.q),
        SpaceKind::Circle => CostSpace::circle(
            raw.points
                .as_ref()
                .ok_or_else(|| invalid("points", "required for kind circle"))?,
            raw.q,
        ),
        SpaceKind::Line => CostSpace::line(
            raw.points
                .as_ref()
                .ok_or_else(|| invalid("points", "required for kind line"))?,
            raw.q,
        ),
    }
}

fn check_q(q: f64) -> Result<()> {
    if q.is_finite() && q > 0.0 {
        Ok(())
    } else {
        Err(invalid("q", format!("must be a positive finite real, got {q}")))
    }
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(invalid("p", format!("must lie in [1, inf], got {p}")))
    }
}

/// `l_p` norm of a vector of absolute coordinate differences.
#[inline]
pub(crate) fn lp_norm(diffs: impl Iterator<Item = f64>, p: f64) -> f64 {
    if p.is_infinite() {
        diffs.fold(0.0, f64::max)
    } else if p == 1.0 {
        diffs.sum()
    } else if p == 2.0 {
        diffs.map(|d| d * d).sum::<f64>().sqrt()
    } else {
        diffs.map(|d| d.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn grid_len(n: usize, axis: usize) -> Result<usize> {
    let mut len: usize = 1;
    for _ in 0..n {
        len = len
            .checked_mul(axis)
            .filter(|&l| l <= MAX_POINTS)
            .ok_or_else(|| invalid("n", format!("grid exceeds {MAX_POINTS} points")))?;
    }
    Ok(len)
}

impl CostSpace {
    /// Explicit distance matrix; `metric` enables zero-distance and
    /// triangle-inequality checks.
    pub fn explicit(dist: &[Vec<f64>], q: f64, metric: bool) -> Result<Self> {
        check_q(q)?;
        let size = dist.len();
        if size == 0 {
            return Err(invalid("dist", "matrix has no rows"));
        }
        for (row, r) in dist.iter().enumerate() {
            if r.len() != size {
                return Err(Error::NotSquare {
                    row,
                    len: r.len(),
                    expected: size,
                });
            }
        }
        for i in 0..size {
            for j in 0..size {
                let v = dist[i][j];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::NegativeEntry { i, j, value: v });
                }
            }
        }
        for (i, r) in dist.iter().enumerate() {
            if r[i] != 0.0 {
                return Err(Error::NonzeroDiagonal { i, value: r[i] });
            }
        }
        for i in 0..size {
            for j in (i + 1)..size {
                let (a, b) = (dist[i][j], dist[j][i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::Asymmetric { i, j, a, b });
                }
            }
        }
        let flat: Vec<f64> = (0..size)
            .flat_map(|i| (0..size).map(move |j| (i, j)))
            .map(|(i, j)| if i <= j { dist[i][j] } else { dist[j][i] })
            .collect();
        if metric {
            for i in 0..size {
                for j in (i + 1)..size {
                    if flat[i * size + j] == 0.0 {
                        return Err(Error::ZeroOffDiagonal { i, j });
                    }
                }
            }
            for i in 0..size {
                for j in 0..size {
                    for k in 0..size {
                        let excess = flat[i * size + k] - flat[i * size + j] - flat[j * size + k];
                        if excess > METRIC_TOLERANCE {
                            return Err(Error::TriangleViolation { i, j, k, excess });
                        }
                    }
                }
            }
        } else if size > 1 && flat.iter().all(|&v| v == 0.0) {
            return Err(invalid("dist", "cost is identically zero"));
        }
        let positive = flat.iter().copied().filter(|&v| v > 0.0);
        let min_dist = positive.clone().fold(f64::INFINITY, f64::min);
        let max_dist = positive.fold(0.0, f64::max);
        let geometry = Geometry::Explicit {
            size,
            dist: flat,
            metric,
        };
        Ok(Self::finish(
            SpaceKind::ExplicitMetric,
            q,
            geometry,
            size,
            min_dist,
            max_dist,
        ))
    }

    /// Discrete metric on `size` points.
    pub fn discrete(size: usize, q: f64) -> Result<Self> {
        check_q(q)?;
        if size == 0 {
            return Err(invalid("size", "must be at least 1"));
        }
        let (min_dist, max_dist) = if size > 1 { (1.0, 1.0) } else { (f64::INFINITY, 0.0) };
        Ok(Self::finish(
            SpaceKind::DiscreteMetric,
            q,
            Geometry::Discrete { size },
            size,
            min_dist,
            max_dist,
        ))
    }

    /// The grid `[0..s]^n` with the `l_p` distance.
    pub fn lp_grid(n: usize, s: usize, p: f64, q: f64) -> Result<Self> {
        check_q(q)?;
        check_p(p)?;
        if n == 0 {
            return Err(invalid("n", "dimension must be at least 1"));
        }
        if s == 0 {
            return Err(invalid("s", "side must be at least 1"));
        }
        let len = grid_len(n, s + 1)?;
        let gp = GridParams { n, s, p };
        let max_dist = lp_norm(std::iter::repeat_n(s as f64, n), p);
        Ok(Self::finish(
            SpaceKind::LpGrid,
            q,
            Geometry::Grid(gp),
            len,
            1.0,
            max_dist,
        ))
    }

    /// The discrete torus `[0..2s]^n` with period `2s + 1`, into which the
    /// grid `[0..s]^n` embeds isometrically.
    pub fn lp_torus(n: usize, s: usize, p: f64, q: f64) -> Result<Self> {
        check_q(q)?;
        check_p(p)?;
        if n == 0 {
            return Err(invalid("n", "dimension must be at least 1"));
        }
        if s == 0 {
            return Err(invalid("s", "side must be at least 1"));
        }
        let len = grid_len(n, 2 * s + 1)?;
        let gp = GridParams { n, s, p };
        let max_dist = lp_norm(std::iter::repeat_n(s as f64, n), p);
        Ok(Self::finish(
            SpaceKind::LpTorus,
            q,
            Geometry::Torus(gp),
            len,
            1.0,
            max_dist,
        ))
    }

    /// Distinct points of the circle `[0, 1)`.
    pub fn circle(positions: &[f64], q: f64) -> Result<Self> {
        check_q(q)?;
        Self::check_positions(positions, true)?;
        let mut sorted = positions.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (min_dist, max_dist) = if sorted.len() > 1 {
            let mut min_gap: f64 = 1.0 - sorted[sorted.len() - 1] + sorted[0];
            for w in sorted.windows(2) {
                min_gap = min_gap.min(w[1] - w[0]);
            }
            let mut max_d: f64 = 0.0;
            for &a in &sorted {
                for &b in &sorted {
                    max_d = max_d.max(circle_dist(a, b));
                }
            }
            (min_gap, max_d)
        } else {
            (f64::INFINITY, 0.0)
        };
        Ok(Self::finish(
            SpaceKind::Circle,
            q,
            Geometry::Circle {
                pos: positions.to_vec(),
            },
            positions.len(),
            min_dist,
            max_dist,
        ))
    }

    /// `k` equispaced circle points `j / k`.
    pub fn equispaced_circle(k: usize, q: f64) -> Result<Self> {
        let pos: Vec<f64> = (0..k).map(|j| j as f64 / k as f64).collect();
        Self::circle(&pos, q)
    }

    /// Distinct points of the real line.
    pub fn line(positions: &[f64], q: f64) -> Result<Self> {
        check_q(q)?;
        Self::check_positions(positions, false)?;
        let mut sorted = positions.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (min_dist, max_dist) = if sorted.len() > 1 {
            let min_gap = sorted
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min);
            (min_gap, sorted[sorted.len() - 1] - sorted[0])
        } else {
            (f64::INFINITY, 0.0)
        };
        Ok(Self::finish(
            SpaceKind::Line,
            q,
            Geometry::Line {
                pos: positions.to_vec(),
            },
            positions.len(),
            min_dist,
            max_dist,
        ))
    }

    fn check_positions(positions: &[f64], circle: bool) -> Result<()> {
        if positions.is_empty() {
            return Err(invalid("points", "no points given"));
        }
        if let Some(&x) = positions
            .iter()
            .find(|&&x| !x.is_finite() || (circle && !(0.0..1.0).contains(&x)))
        {
            return Err(invalid("points", format!("position {x} out of range")));
        }
        let mut sorted = positions.to_vec();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("points", "positions must be distinct"));
        }
        Ok(())
    }

    fn finish(
        kind: SpaceKind,
        q: f64,
        geometry: Geometry,
        len: usize,
        min_dist: f64,
        max_dist: f64,
    ) -> Self {
        let mut h = mix64(fnv1a64(kind.name().as_bytes()));
        let mut feed = |w: u64| h = mix64(h ^ w.wrapping_add(0x9e37_79b9_7f4a_7c15));
        feed(len as u64);
        match &geometry {
            Geometry::Explicit { dist, metric, .. } => {
                feed(*metric as u64);
                dist.iter().for_each(|v| feed(v.to_bits()));
            }
            Geometry::Discrete { size } => feed(*size as u64),
            Geometry::Grid(g) | Geometry::Torus(g) => {
                feed(g.n as u64);
                feed(g.s as u64);
                feed(g.p.to_bits());
            }
            Geometry::Circle { pos } | Geometry::Line { pos } => {
                pos.iter().for_each(|v| feed(v.to_bits()))
            }
        }
        Self {
            kind,
            q,
            geometry,
            len,
            min_dist,
            max_dist,
            fingerprint: h,
        }
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.len
    }

    /// True when the space has no points (never, for validated spaces).
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    /// Cost exponent.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// Same space with a different cost exponent.
    pub fn with_q(&self, q: f64) -> Result<Self> {
        check_q(q)?;
        Ok(Self::finish(
            self.kind,
            q,
            self.geometry.clone(),
            self.len,
            self.min_dist,
            self.max_dist,
        ))
    }

    /// Hash of the point set and distance, excluding the cost exponent; used
    /// to detect distributions from different spaces.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Smallest positive distance (infinite for a one-point space).
    pub fn min_dist(&self) -> f64 {
        self.min_dist
    }

    /// Largest distance, the diameter.
    pub fn max_dist(&self) -> f64 {
        self.max_dist
    }

    /// Whether the distance is declared to be a metric.
    pub fn is_metric(&self) -> bool {
        match &self.geometry {
            Geometry::Explicit { metric, .. } => *metric,
            _ => true,
        }
    }

    /// Grid or torus parameters.
    pub fn grid_params(&self) -> Option<GridParams> {
        match &self.geometry {
            Geometry::Grid(g) | Geometry::Torus(g) => Some(*g),
            _ => None,
        }
    }

    /// Number of values per axis for a grid or torus.
    pub fn axis_len(&self) -> Option<usize> {
        match &self.geometry {
            Geometry::Grid(g) => Some(g.s + 1),
            Geometry::Torus(g) => Some(2 * g.s + 1),
            _ => None,
        }
    }

    /// Positions for circle and line spaces.
    pub fn positions(&self) -> Option<&[f64]> {
        match &self.geometry {
            Geometry::Circle { pos } | Geometry::Line { pos } => Some(pos),
            _ => None,
        }
    }

    /// Lattice coordinates of a grid or torus point.
    pub fn coords(&self, i: usize) -> Option<Vec<usize>> {
        let (n, axis) = match &self.geometry {
            Geometry::Grid(g) => (g.n, g.s + 1),
            Geometry::Torus(g) => (g.n, 2 * g.s + 1),
            _ => return None,
        };
        Some(decode(i, n, axis))
    }

    /// Index of the grid or torus point with the given coordinates.
    pub fn index_of(&self, coords: &[usize]) -> Option<usize> {
        let axis = self.axis_len()?;
        let g = self.grid_params()?;
        if coords.len() != g.n || coords.iter().any(|&c| c >= axis) {
            return None;
        }
        Some(coords.iter().fold(0, |acc, &c| acc * axis + c))
    }

    /// For a torus, whether point `i` lies in the embedded grid `[0..s]^n`.
    pub fn in_embedded_grid(&self, i: usize) -> bool {
        match &self.geometry {
            Geometry::Torus(g) => decode(i, g.n, 2 * g.s + 1).iter().all(|&c| c <= g.s),
            _ => true,
        }
    }

    /// Torus index of the grid point `[0..s]^n` with grid index `i`.
    pub fn embed_grid_index(&self, i: usize) -> Option<usize> {
        let g = match &self.geometry {
            Geometry::Torus(g) => *g,
            _ => return None,
        };
        let c = decode(i, g.n, g.s + 1);
        self.index_of(&c)
    }

    /// Label of point `i`.
    pub fn label(&self, i: usize) -> PointLabel {
        match &self.geometry {
            Geometry::Explicit { .. } | Geometry::Discrete { .. } => PointLabel::Index(i),
            Geometry::Grid(g) => {
                PointLabel::Lattice(decode(i, g.n, g.s + 1).into_iter().map(|c| c as i64).collect())
            }
            Geometry::Torus(g) => PointLabel::Lattice(
                decode(i, g.n, 2 * g.s + 1)
                    .into_iter()
                    .map(|c| c as i64)
                    .collect(),
            ),
            Geometry::Circle { pos } | Geometry::Line { pos } => PointLabel::Real(pos[i]),
        }
    }

    /// Distance `d(i, j)`.
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.geometry {
            Geometry::Explicit { size, dist, .. } => dist[i * size + j],
            Geometry::Discrete { .. } => {
                if i == j {
                    0.0
                } else {
                    1.0
                }
            }
            Geometry::Grid(g) => {
                if i == j {
                    return 0.0;
                }
                let axis = g.s + 1;
                let (mut a, mut b) = (i, j);
                let diffs = (0..g.n).map(move |_| {
                    let d = (a % axis).abs_diff(b % axis);
                    a /= axis;
                    b /= axis;
                    d as f64
                });
                lp_norm(diffs, g.p)
            }
            Geometry::Torus(g) => {
                if i == j {
                    return 0.0;
                }
                let m = 2 * g.s + 1;
                let (mut a, mut b) = (i, j);
                let diffs = (0..g.n).map(move |_| {
                    let d = (a % m).abs_diff(b % m);
                    a /= m;
                    b /= m;
                    d.min(m - d) as f64
                });
                lp_norm(diffs, g.p)
            }
            Geometry::Circle { pos } => circle_dist(pos[i], pos[j]),
            Geometry::Line { pos } => (pos[i] - pos[j]).abs(),
        }
    }

    /// Cost `c(i, j) = d(i, j)^q`.
    #[inline]
    pub fn cost(&self, i: usize, j: usize) -> f64 {
        let d = self.dist(i, j);
        pow_q(d, self.q)
    }

    /// Dense `len x len` distance matrix (row-major).
    pub fn dist_matrix(&self) -> Vec<f64> {
        let n = self.len;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.dist(i, j);
            }
        }
        out
    }

    /// Dense `len x len` cost matrix (row-major).
    pub fn cost_matrix(&self) -> Vec<f64> {
        let n = self.len;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.cost(i, j);
            }
        }
        out
    }

    /// Sort key of point `i` for spaces with a natural total order.
    ///
    /// Lines and one-dimensional grids are ordered by coordinate; discrete
    /// and explicit spaces by index.
    pub fn order_key(&self, i: usize) -> Result<f64> {
        match &self.geometry {
            Geometry::Line { pos } => Ok(pos[i]),
            Geometry::Grid(g) if g.n == 1 => Ok(i as f64),
            Geometry::Discrete { .. } | Geometry::Explicit { .. } => Ok(i as f64),
            _ => Err(Error::Unordered(self.kind.name())),
        }
    }

    /// Points sorted by [`Self::order_key`].
    pub fn ordered_points(&self) -> Result<Vec<usize>> {
        let mut keyed = (0..self.len)
            .map(|i| self.order_key(i).map(|k| (k, i)))
            .collect::<Result<Vec<_>>>()?;
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(keyed.into_iter().map(|(_, i)| i).collect())
    }

    /// Serialized description of this space.
    pub fn to_raw(&self) -> RawSpace {
        let mut raw = RawSpace {
            kind: self.kind,
            q: self.q,
            dist: None,
            non_metric: false,
            size: None,
            n: None,
            s: None,
            p: None,
            points: None,
        };
        match &self.geometry {
            Geometry::Explicit { size, dist, metric } => {
                raw.dist = Some(dist.chunks(*size).map(<[f64]>::to_vec).collect());
                raw.non_metric = !metric;
            }
            Geometry::Discrete { size } => raw.size = Some(*size),
            Geometry::Grid(g) | Geometry::Torus(g) => {
                raw.n = Some(g.n);
                raw.s = Some(g.s);
                raw.p = Some(PIndex::from_value(g.p));
            }
            Geometry::Circle { pos } | Geometry::Line { pos } => raw.points = Some(pos.clone()),
        }
        raw
    }
}

/// `d^q` with exact handling of `q = 1` and `d = 0`.
#[inline]
pub fn pow_q(d: f64, q: f64) -> f64 {
    if q == 1.0 || d == 0.0 {
        d
    } else if q == 0.5 {
        d.sqrt()
    } else if q == 2.0 {
        d * d
    } else {
        d.powf(q)
    }
}

/// Intrinsic distance on the circle `[0, 1)`.
#[inline]
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

pub(crate) fn decode(mut i: usize, n: usize, axis: usize) -> Vec<usize> {
    let mut c = vec![0; n];
    for k in (0..n).rev() {
        c[k] = i % axis;
        i /= axis;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 1.0],
            vec![2.0, 1.0, 0.0],
        ]
    }

    #[test]
    fn one_point_space_is_valid() {
        let s = CostSpace::explicit(&[vec![0.0]], 1.0, true).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.max_dist(), 0.0);
    }

    #[test]
    fn path_metric_min_max() {
        let s = CostSpace::explicit(&path3(), 1.0, true).unwrap();
        assert_eq!(s.min_dist(), 1.0);
        assert_eq!(s.max_dist(), 2.0);
    }

    #[test]
    fn each_defect_has_its_own_error() {
        let mut m = path3();
        m[0][1] = 1.5;
        assert!(matches!(
            CostSpace::explicit(&m, 1.0, true),
            Err(Error::Asymmetric { .. })
        ));
        let mut m = path3();
        m[0][2] = -2.0;
        m[2][0] = -2.0;
        assert!(matches!(
            CostSpace::explicit(&m, 1.0, true),
            Err(Error::NegativeEntry { .. })
        ));
        let mut m = path3();
        m[1][1] = 0.5;
        assert!(matches!(
            CostSpace::explicit(&m, 1.0, true),
            Err(Error::NonzeroDiagonal { i: 1, .. })
        ));
        let m = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        assert!(matches!(
            CostSpace::explicit(&m, 1.0, true),
            Err(Error::ZeroOffDiagonal { i: 0, j: 1 })
        ));
        let mut m = path3();
        m[0][2] = 3.0;
        m[2][0] = 3.0;
        assert!(matches!(
            CostSpace::explicit(&m, 1.0, true),
            Err(Error::TriangleViolation { .. })
        ));
        assert!(CostSpace::explicit(&m, 1.0, false).is_ok());
        let m = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0], vec![2.0, 1.0, 0.0]];
        assert!(matches!(
            CostSpace::explicit(&m, 1.0, true),
            Err(Error::NotSquare { row: 1, .. })
        ));
    }

    #[test]
    fn torus_distance_wraps() {
        let t = CostSpace::lp_torus(1, 3, 2.0, 1.0).unwrap();
        assert_eq!(t.len(), 7);
        assert_eq!(t.dist(0, 6), 1.0);
        assert_eq!(t.dist(0, 3), 3.0);
        assert_eq!(t.dist(0, 4), 3.0);
        let t2 = CostSpace::lp_torus(2, 2, 1.0, 1.0).unwrap();
        let a = t2.index_of(&[0, 0]).unwrap();
        let b = t2.index_of(&[4, 3]).unwrap();
        assert_eq!(t2.dist(a, b), 1.0 + 2.0);
    }

    #[test]
    fn embedded_grid_is_isometric() {
        let t = CostSpace::lp_torus(2, 3, 2.0, 1.0).unwrap();
        let g = CostSpace::lp_grid(2, 3, 2.0, 1.0).unwrap();
        for i in 0..g.len() {
            for j in 0..g.len() {
                let (ti, tj) = (t.embed_grid_index(i).unwrap(), t.embed_grid_index(j).unwrap());
                assert!(t.in_embedded_grid(ti));
                assert_eq!(t.dist(ti, tj), g.dist(i, j));
            }
        }
    }

    #[test]
    fn grid_row_major_encoding() {
        let g = CostSpace::lp_grid(2, 2, f64::INFINITY, 1.0).unwrap();
        assert_eq!(g.coords(5).unwrap(), vec![1, 2]);
        assert_eq!(g.index_of(&[1, 2]).unwrap(), 5);
        assert_eq!(g.dist(0, 8), 2.0);
    }

    #[test]
    fn circle_distance_and_bounds() {
        let c = CostSpace::equispaced_circle(4, 1.0).unwrap();
        assert_eq!(c.dist(0, 3), 0.25);
        assert_eq!(c.dist(0, 2), 0.5);
        assert_eq!(c.min_dist(), 0.25);
        assert_eq!(c.max_dist(), 0.5);
        assert!(CostSpace::circle(&[0.2, 1.0], 1.0).is_err());
    }

    #[test]
    fn raw_round_trip() {
        for s in [
            CostSpace::explicit(&path3(), 0.5, true).unwrap(),
            CostSpace::lp_torus(2, 3, f64::INFINITY, 1.0).unwrap(),
            CostSpace::circle(&[0.1, 0.7], 2.0).unwrap(),
            CostSpace::discrete(4, 1.0).unwrap(),
        ] {
            let json = serde_json::to_string(&s.to_raw()).unwrap();
            let back: RawSpace = serde_json::from_str(&json).unwrap();
            assert_eq!(validate_space(&back).unwrap(), s);
        }
    }

    #[test]
    fn parse_grid_file_form() {
        let raw: RawSpace =
            serde_json::from_str(r#"{"kind":"lp-grid","n":2,"s":7,"p":2,"q":1}"#).unwrap();
        let s = validate_space(&raw).unwrap();
        assert_eq!(s.len(), 64);
        let raw: RawSpace =
            serde_json::from_str(r#"{"kind":"lp-torus","n":1,"s":2,"p":"inf"}"#).unwrap();
        assert!(validate_space(&raw).unwrap().grid_params().unwrap().p.is_infinite());
    }
}
