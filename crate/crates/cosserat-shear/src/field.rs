//! Uniform 2D grid scalar fields with Dirichlet boundary handling,
//! discrete differential operators, and bit-exact file I/O.
//!
//! Nodes are vertex-centred: node `(i, j)` sits at `(i*hx, j*hy)` and the
//! field is stored row-major with `j` (the y index) as the slow index.
//! Floats are serialised with the shortest representation that parses back
//! to the identical bits, so CSV round-trips are exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("grid needs nx, ny >= 3 and positive edge lengths")]
    BadGrid,
    #[error("field value at node ({0}, {1}) is not finite")]
    NonFinite(usize, usize),
    #[error("boundary segments must satisfy 0 <= t0 < t1 <= 1 (side {0})")]
    BadSegment(&'static str),
    #[error("side {0} is not covered exactly: {1}")]
    Cover(&'static str, &'static str),
    #[error("no boundary segments given")]
    EmptyBoundary,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("pgm range needs lo < hi")]
    BadRange,
}

/// Uniform vertex-centred grid on `[0, lx] x [0, ly]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self, FieldError> {
        if nx < 3 || ny < 3 || !(lx > 0.0) || !(ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
            return Err(FieldError::BadGrid);
        }
        Ok(Grid2D { nx, ny, lx, ly })
    }

    pub fn hx(&self) -> f64 {
        self.lx / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / (self.ny - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx()
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.hy()
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn n_nodes(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }
}

/// Scalar nodal field on a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self, FieldError> {
        assert_eq!(values.len(), grid.n_nodes(), "value count must match grid");
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if !values[grid.idx(i, j)].is_finite() {
                    return Err(FieldError::NonFinite(i, j));
                }
            }
        }
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: Grid2D, v: f64) -> Self {
        ScalarField {
            grid,
            values: vec![v; grid.n_nodes()],
        }
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.n_nodes());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(grid.x(i), grid.y(j)));
            }
        }
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let idx = self.grid.idx(i, j);
        self.values[idx] = v;
    }
}

/// One side of the rectangular boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Bottom => "bottom",
            Side::Top => "top",
        }
    }
}

/// Constant Dirichlet value on the arc fraction `[t0, t1]` of one side.
///
/// Left/right sides are parametrised by y (bottom to top), bottom/top by x
/// (left to right), both normalised to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub side: Side,
    pub t0: f64,
    pub t1: f64,
    pub value: f64,
}

/// Piecewise-constant Dirichlet data covering the whole boundary.
///
/// Corner nodes belong to the first side containing them in the fixed
/// order left, right, bottom, top (so the left and right sides own all
/// four corners).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    segments: Vec<Segment>,
}

const COVER_TOL: f64 = 1e-9;

impl BoundarySpec {
    /// Validates that the segments cover each side exactly, without gaps or
    /// overlaps, and with positive lengths.
    pub fn new(segments: Vec<Segment>) -> Result<Self, FieldError> {
        if segments.is_empty() {
            return Err(FieldError::EmptyBoundary);
        }
        for side in [Side::Left, Side::Right, Side::Bottom, Side::Top] {
            let mut on_side: Vec<&Segment> =
                segments.iter().filter(|s| s.side == side).collect();
            if on_side.is_empty() {
                return Err(FieldError::Cover(side.name(), "no segments"));
            }
            for s in &on_side {
                if !(s.t0 >= -COVER_TOL
                    && s.t1 <= 1.0 + COVER_TOL
                    && s.t1 - s.t0 > COVER_TOL
                    && s.value.is_finite())
                {
                    return Err(FieldError::BadSegment(side.name()));
                }
            }
            on_side.sort_by(|u, v| u.t0.total_cmp(&v.t0));
            if on_side[0].t0.abs() > COVER_TOL {
                return Err(FieldError::Cover(side.name(), "does not start at 0"));
            }
            for w in on_side.windows(2) {
                let gap = w[1].t0 - w[0].t1;
                if gap > COVER_TOL {
                    return Err(FieldError::Cover(side.name(), "gap between segments"));
                }
                if gap < -COVER_TOL {
                    return Err(FieldError::Cover(side.name(), "overlapping segments"));
                }
            }
            if (on_side.last().unwrap().t1 - 1.0).abs() > COVER_TOL {
                return Err(FieldError::Cover(side.name(), "does not end at 1"));
            }
        }
        Ok(BoundarySpec { segments })
    }

    /// The same constant on all four sides.
    pub fn uniform(value: f64) -> Self {
        let seg = |side| Segment {
            side,
            t0: 0.0,
            t1: 1.0,
            value,
        };
        BoundarySpec {
            segments: vec![
                seg(Side::Left),
                seg(Side::Right),
                seg(Side::Bottom),
                seg(Side::Top),
            ],
        }
    }

    /// Samples `f(x, y)` into one segment per boundary node, so nodal
    /// boundary values reproduce `f` exactly on the given grid.
    pub fn from_fn(grid: &Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut segments = Vec::new();
        let mut side_nodes = |side: Side, n: usize| {
            let den = (n - 1) as f64;
            for k in 0..n {
                let t0 = if k == 0 { 0.0 } else { (k as f64 - 0.5) / den };
                let t1 = if k == n - 1 {
                    1.0
                } else {
                    (k as f64 + 0.5) / den
                };
                let (x, y) = match side {
                    Side::Left => (0.0, grid.y(k)),
                    Side::Right => (grid.lx, grid.y(k)),
                    Side::Bottom => (grid.x(k), 0.0),
                    Side::Top => (grid.x(k), grid.ly),
                };
                segments.push(Segment {
                    side,
                    t0,
                    t1,
                    value: f(x, y),
                });
            }
        };
        side_nodes(Side::Left, grid.ny);
        side_nodes(Side::Right, grid.ny);
        side_nodes(Side::Bottom, grid.nx);
        side_nodes(Side::Top, grid.nx);
        BoundarySpec { segments }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Value at arc position `t` of `side`. Segment intervals are half-open
    /// `[t0, t1)` with the last one closed.
    pub fn value_at(&self, side: Side, t: f64) -> f64 {
        let mut on_side: Vec<&Segment> = self.segments.iter().filter(|s| s.side == side).collect();
        on_side.sort_by(|u, v| u.t0.total_cmp(&v.t0));
        for s in &on_side {
            if t < s.t1 {
                return s.value;
            }
        }
        on_side.last().expect("validated cover").value
    }

    /// Smallest and largest boundary value.
    pub fn value_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in &self.segments {
            lo = lo.min(s.value);
            hi = hi.max(s.value);
        }
        (lo, hi)
    }

    /// The side owning node `(i, j)` and its arc position, or `None` for
    /// interior nodes.
    pub fn owner(grid: &Grid2D, i: usize, j: usize) -> Option<(Side, f64)> {
        let ty = j as f64 / (grid.ny - 1) as f64;
        let tx = i as f64 / (grid.nx - 1) as f64;
        if i == 0 {
            Some((Side::Left, ty))
        } else if i == grid.nx - 1 {
            Some((Side::Right, ty))
        } else if j == 0 {
            Some((Side::Bottom, tx))
        } else if j == grid.ny - 1 {
            Some((Side::Top, tx))
        } else {
            None
        }
    }
}

/// Returns a copy of `f` with boundary nodes set from `bc`.
pub fn apply_dirichlet(f: &ScalarField, bc: &BoundarySpec) -> ScalarField {
    let mut out = f.clone();
    impose_dirichlet(&mut out, bc);
    out
}

/// Sets boundary nodes from `bc` in place.
pub fn impose_dirichlet(f: &mut ScalarField, bc: &BoundarySpec) {
    let grid = *f.grid();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if let Some((side, t)) = BoundarySpec::owner(&grid, i, j) {
                f.set(i, j, bc.value_at(side, t));
            }
        }
    }
}

/// 5-point discrete Laplacian; boundary nodes get zero.
pub fn laplacian5(f: &ScalarField) -> ScalarField {
    let grid = *f.grid();
    let (nx, ny) = (grid.nx, grid.ny);
    let ihx2 = 1.0 / (grid.hx() * grid.hx());
    let ihy2 = 1.0 / (grid.hy() * grid.hy());
    let v = f.values();
    let mut out = vec![0.0; v.len()];
    for j in 1..ny - 1 {
        let row = &v[j * nx..(j + 1) * nx];
        let below = &v[(j - 1) * nx..j * nx];
        let above = &v[(j + 1) * nx..(j + 2) * nx];
        let orow = &mut out[j * nx..(j + 1) * nx];
        for i in 1..nx - 1 {
            let c = row[i];
            orow[i] = (row[i - 1] - 2.0 * c + row[i + 1]) * ihx2
                + (below[i] - 2.0 * c + above[i]) * ihy2;
        }
    }
    ScalarField { grid, values: out }
}

/// Squared gradient magnitude per node: central differences in the
/// interior, one-sided (first-order) at the boundary.
pub fn grad_sq(f: &ScalarField) -> ScalarField {
    let grid = *f.grid();
    let (nx, ny) = (grid.nx, grid.ny);
    let (hx, hy) = (grid.hx(), grid.hy());
    let v = f.values();
    let mut out = vec![0.0; v.len()];
    for j in 0..ny {
        for i in 0..nx {
            let idx = grid.idx(i, j);
            let gx = if i == 0 {
                (v[idx + 1] - v[idx]) / hx
            } else if i == nx - 1 {
                (v[idx] - v[idx - 1]) / hx
            } else {
                (v[idx + 1] - v[idx - 1]) / (2.0 * hx)
            };
            let gy = if j == 0 {
                (v[idx + nx] - v[idx]) / hy
            } else if j == ny - 1 {
                (v[idx] - v[idx - nx]) / hy
            } else {
                (v[idx + nx] - v[idx - nx]) / (2.0 * hy)
            };
            out[idx] = gx * gx + gy * gy;
        }
    }
    ScalarField { grid, values: out }
}

/// Maximum absolute nodewise difference.
pub fn linf_diff(a: &ScalarField, b: &ScalarField) -> Result<f64, FieldError> {
    if a.grid() != b.grid() {
        return Err(FieldError::GridMismatch);
    }
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

fn io_err(path: &Path, source: std::io::Error) -> FieldError {
    FieldError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes the field as CSV: a `# nx=.. ny=.. lx=.. ly=..` header line, then
/// `ny` rows (y increasing) of `nx` comma-separated values.
pub fn write_csv(f: &ScalarField, path: &Path) -> Result<(), FieldError> {
    let grid = f.grid();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# nx={} ny={} lx={} ly={}",
        grid.nx, grid.ny, grid.lx, grid.ly
    );
    for j in 0..grid.ny {
        let row = &f.values()[j * grid.nx..(j + 1) * grid.nx];
        let mut line = String::new();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            let _ = write!(line, "{v}");
        }
        out.push_str(&line);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Reads a field written by [`write_csv`]; the round-trip is bit exact.
pub fn read_csv(path: &Path) -> Result<ScalarField, FieldError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let perr = |line: usize, msg: String| FieldError::Parse {
        path: path.display().to_string(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| perr(1, "empty file".into()))?;
    let rest = header
        .strip_prefix("# ")
        .ok_or_else(|| perr(1, "missing '# nx=... ny=... lx=... ly=...' header".into()))?;
    let mut nx = None;
    let mut ny = None;
    let mut lx = None;
    let mut ly = None;
    for tok in rest.split_whitespace() {
        let (key, val) = tok
            .split_once('=')
            .ok_or_else(|| perr(1, format!("bad header token '{tok}'")))?;
        match key {
            "nx" => nx = Some(val.parse::<usize>().map_err(|e| perr(1, e.to_string()))?),
            "ny" => ny = Some(val.parse::<usize>().map_err(|e| perr(1, e.to_string()))?),
            "lx" => lx = Some(val.parse::<f64>().map_err(|e| perr(1, e.to_string()))?),
            "ly" => ly = Some(val.parse::<f64>().map_err(|e| perr(1, e.to_string()))?),
            other => return Err(perr(1, format!("unknown header key '{other}'"))),
        }
    }
    let (nx, ny, lx, ly) = match (nx, ny, lx, ly) {
        (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
        _ => return Err(perr(1, "header must define nx, ny, lx, ly".into())),
    };
    let grid = Grid2D::new(nx, ny, lx, ly).map_err(|e| perr(1, e.to_string()))?;
    let mut values = Vec::with_capacity(grid.n_nodes());
    let mut rows = 0usize;
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        if rows > ny {
            return Err(perr(lineno + 1, format!("expected {ny} data rows")));
        }
        let mut count = 0usize;
        for (col, cell) in line.split(',').enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| perr(lineno + 1, format!("column {}: bad number '{cell}'", col + 1)))?;
            if !v.is_finite() {
                return Err(perr(lineno + 1, format!("column {}: non-finite value", col + 1)));
            }
            values.push(v);
            count += 1;
        }
        if count != nx {
            return Err(perr(
                lineno + 1,
                format!("row {rows}: expected {nx} values, got {count}"),
            ));
        }
    }
    if rows != ny {
        return Err(perr(
            text.lines().count(),
            format!("expected {ny} data rows, got {rows}"),
        ));
    }
    Ok(ScalarField { grid, values })
}

/// Writes a plain (`P2`) PGM with maxval 255. Values map affinely from
/// `[lo, hi]` to `[0, 255]` with clamping; rows run top to bottom so the
/// image displays with y pointing up.
pub fn write_pgm(f: &ScalarField, path: &Path, lo: f64, hi: f64) -> Result<(), FieldError> {
    if !(lo < hi) {
        return Err(FieldError::BadRange);
    }
    let grid = f.grid();
    let mut out = String::new();
    let _ = writeln!(out, "P2");
    let _ = writeln!(out, "{} {}", grid.nx, grid.ny);
    let _ = writeln!(out, "255");
    for j in (0..grid.ny).rev() {
        let row = &f.values()[j * grid.nx..(j + 1) * grid.nx];
        let mut line = String::new();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
            let _ = write!(line, "{}", (255.0 * t).round() as u8);
        }
        out.push_str(&line);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}
