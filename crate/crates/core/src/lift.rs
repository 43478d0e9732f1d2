//! Rounded integer 5/3 lifting along one axis.
//!
//! Analysis interleaves a prediction step (odd samples become details) with an
//! update step (even samples become approximations):
//!
//! ```text
//! d[n] = z[2n+1] - floor((z[2n] + z[2n+2]) / 2)
//! a[n] = z[2n]   + floor((d[n-1] + d[n]) / 4)
//! ```
//!
//! with arithmetic floor (toward negative infinity) so the synthesis
//! equations, run in reverse order with opposite signs, invert it exactly on
//! integers. Borders are pinned so the first and last approximation equal the
//! first and last input sample: a virtual `d[-1] = -d[0]` at the floor end,
//! a virtual unstored `-d[last]` at the ceil end of odd-length signals, and a
//! modified stored last detail `-d[prev] + 4*z[last] - 4*z[last-1]` for even
//! lengths.
//!
//! Length-2 signals cannot pin both borders with a single approximation, so
//! they pass both samples through unchanged (no detail).
//!
//! Besides the plain transform, a node-axis variant keeps the trailing sample
//! of even-length signals as an extra approximation. Node lattices have one
//! more sample than cells, and ceil-halving the cells needs exactly that
//! extra coarse sample when the cell count is odd.

use crate::error::{Error, Result};

#[inline]
fn floor_div(a: i64, b: i64) -> i64 {
    a.div_euclid(b)
}

/// Whether the trailing sample of an even-length signal is kept as an extra
/// approximation (`NodeAxis`) or folded into a modified detail (`Plain`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftMode {
    Plain,
    NodeAxis,
}

/// Output of one analysis pass over a signal of `input_len` samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftPair {
    pub approx: Vec<i64>,
    pub details: Vec<i64>,
    pub input_len: usize,
}

/// Coarse sample count of a lifted signal of length `n`.
pub fn approx_len(n: usize, mode: LiftMode) -> usize {
    match mode {
        _ if n <= 2 => n,
        LiftMode::Plain => n.div_ceil(2),
        LiftMode::NodeAxis => {
            if n % 2 == 0 {
                n / 2 + 1
            } else {
                n.div_ceil(2)
            }
        }
    }
}

/// Stored detail count of a lifted signal of length `n`.
pub fn detail_len(n: usize, mode: LiftMode) -> usize {
    n - approx_len(n, mode)
}

/// Incremental lifter: feed samples in order, then finish. Emits each
/// approximation and detail exactly once, as soon as its dependencies are
/// complete, which lets k-columns be lifted slab by slab with O(1) carry
/// state per column.
#[derive(Debug, Clone)]
pub struct LineLifter {
    mode: LiftMode,
    count: usize,
    z1: i64,
    z2: i64,
    d_prev: i64,
    pending_approx: Option<i64>,
    pending_detail: Option<i64>,
}

impl LineLifter {
    pub fn new(mode: LiftMode) -> Self {
        LineLifter {
            mode,
            count: 0,
            z1: 0,
            z2: 0,
            d_prev: 0,
            pending_approx: None,
            pending_detail: None,
        }
    }

    /// Feed the next sample. Afterwards [`take_approx`](Self::take_approx) and
    /// [`take_detail`](Self::take_detail) yield anything newly completed.
    pub fn feed(&mut self, z: i64) {
        let c = self.count;
        if c >= 2 && c % 2 == 0 {
            let n = c / 2 - 1;
            let d = self.z1 - floor_div(self.z2 + z, 2);
            let a = if n == 0 {
                // d[-1] = -d[0] makes the update vanish.
                self.z2
            } else {
                self.z2 + floor_div(self.d_prev + d, 4)
            };
            self.pending_detail = Some(d);
            self.pending_approx = Some(a);
            self.d_prev = d;
        }
        self.z2 = self.z1;
        self.z1 = z;
        self.count += 1;
    }

    pub fn take_approx(&mut self) -> Option<i64> {
        self.pending_approx.take()
    }

    pub fn take_detail(&mut self) -> Option<i64> {
        self.pending_detail.take()
    }

    /// End of signal: emits the tail coefficients in order
    /// (detail, approx, approx).
    pub fn finish(&mut self) -> (Option<i64>, Vec<i64>) {
        let n = self.count;
        match n {
            0 => (None, vec![]),
            1 => (None, vec![self.z1]),
            2 => (None, vec![self.z2, self.z1]),
            _ if n % 2 == 1 => {
                // Virtual -d[last] cancels the update: a[last] = z[last].
                (None, vec![self.z1])
            }
            _ => match self.mode {
                LiftMode::Plain => {
                    // Modified stored detail pins a[last] to z[last].
                    let d = -self.d_prev + 4 * self.z1 - 4 * self.z2;
                    let a = self.z2 + floor_div(self.d_prev + d, 4);
                    (Some(d), vec![a])
                }
                LiftMode::NodeAxis => {
                    // Odd prefix ends at z[n-2]; z[n-1] passes through.
                    (None, vec![self.z2, self.z1])
                }
            },
        }
    }
}

fn analyze(z: &[i64], mode: LiftMode) -> LiftPair {
    let mut lifter = LineLifter::new(mode);
    let mut approx = Vec::with_capacity(approx_len(z.len(), mode));
    let mut details = Vec::with_capacity(detail_len(z.len(), mode));
    for &v in z {
        lifter.feed(v);
        if let Some(d) = lifter.take_detail() {
            details.push(d);
        }
        if let Some(a) = lifter.take_approx() {
            approx.push(a);
        }
    }
    let (d, tail) = lifter.finish();
    details.extend(d);
    approx.extend(tail);
    debug_assert_eq!(approx.len(), approx_len(z.len(), mode));
    debug_assert_eq!(details.len(), detail_len(z.len(), mode));
    LiftPair {
        approx,
        details,
        input_len: z.len(),
    }
}

/// Analyze a signal: `ceil(n/2)` approximations and `floor(n/2)` details
/// (except length 2, which passes through as two approximations).
pub fn analyze_1d(z: &[i64]) -> LiftPair {
    analyze(z, LiftMode::Plain)
}

/// Analyze a node-lattice line: even lengths keep the trailing sample as an
/// extra approximation so the coarse line closes the last ceil-halved cell.
pub fn node_lift(z: &[i64]) -> LiftPair {
    analyze(z, LiftMode::NodeAxis)
}

fn check_sizes(pair: &LiftPair, mode: LiftMode) -> Result<()> {
    let n = pair.input_len;
    if n == 0
        || pair.approx.len() != approx_len(n, mode)
        || pair.details.len() != detail_len(n, mode)
    {
        return Err(Error::CorruptPair(format!(
            "input_len {} with {} approximations and {} details",
            n,
            pair.approx.len(),
            pair.details.len()
        )));
    }
    Ok(())
}

fn synthesize(pair: &LiftPair, mode: LiftMode) -> Result<Vec<i64>> {
    check_sizes(pair, mode)?;
    let n = pair.input_len;
    let a = &pair.approx;
    let d = &pair.details;
    match n {
        1 => return Ok(vec![a[0]]),
        2 => return Ok(vec![a[0], a[1]]),
        _ => {}
    }
    let mut z = vec![0i64; n];
    if n % 2 == 1 {
        let m = (n - 1) / 2;
        z[0] = a[0];
        for t in 1..m {
            z[2 * t] = a[t] - floor_div(d[t - 1] + d[t], 4);
        }
        z[2 * m] = a[m];
        for t in 0..m {
            z[2 * t + 1] = d[t] + floor_div(z[2 * t] + z[2 * t + 2], 2);
        }
    } else {
        match mode {
            LiftMode::Plain => {
                let m = n / 2;
                z[0] = a[0];
                for t in 1..m {
                    z[2 * t] = a[t] - floor_div(d[t - 1] + d[t], 4);
                }
                for t in 0..m - 1 {
                    z[2 * t + 1] = d[t] + floor_div(z[2 * t] + z[2 * t + 2], 2);
                }
                let num = d[m - 1] + d[m - 2] + 4 * z[2 * m - 2];
                if num % 4 != 0 {
                    return Err(Error::CorruptPair(
                        "modified ceil detail is not divisible".into(),
                    ));
                }
                z[2 * m - 1] = num / 4;
            }
            LiftMode::NodeAxis => {
                let prefix = LiftPair {
                    approx: a[..a.len() - 1].to_vec(),
                    details: d.clone(),
                    input_len: n - 1,
                };
                let head = synthesize(&prefix, LiftMode::NodeAxis)?;
                z[..n - 1].copy_from_slice(&head);
                z[n - 1] = a[a.len() - 1];
            }
        }
    }
    Ok(z)
}

/// Exact inverse of [`analyze_1d`].
pub fn synthesize_1d(pair: &LiftPair) -> Result<Vec<i64>> {
    synthesize(pair, LiftMode::Plain)
}

/// Exact inverse of [`node_lift`].
pub fn node_unlift(pair: &LiftPair) -> Result<Vec<i64>> {
    synthesize(pair, LiftMode::NodeAxis)
}

/// Result of lifting every line of an array along one axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxisLift {
    pub approx: Vec<i64>,
    pub details: Vec<i64>,
    /// Extents of the approximation array.
    pub approx_extents: [usize; 3],
    /// Extents of the detail array.
    pub detail_extents: [usize; 3],
}

fn line_indices(extents: [usize; 3], axis: usize) -> impl Iterator<Item = [usize; 3]> {
    let mut others = [0usize; 2];
    let mut w = 0;
    for ax in 0..3 {
        if ax != axis {
            others[w] = ax;
            w += 1;
        }
    }
    let (o0, o1) = (others[0], others[1]);
    (0..extents[o1]).flat_map(move |b| {
        (0..extents[o0]).map(move |a| {
            let mut idx = [0usize; 3];
            idx[o0] = a;
            idx[o1] = b;
            idx
        })
    })
}

#[inline]
fn flat(idx: [usize; 3], ext: [usize; 3]) -> usize {
    idx[0] + ext[0] * (idx[1] + ext[1] * idx[2])
}

/// Apply the 1-D analysis independently along every line parallel to `axis`.
/// A 2-D array is the degenerate case with a trailing extent of 1.
pub fn analyze_axis(data: &[i64], extents: [usize; 3], axis: usize, mode: LiftMode) -> AxisLift {
    assert_eq!(data.len(), extents[0] * extents[1] * extents[2]);
    let n = extents[axis];
    let al = approx_len(n, mode);
    let dl = detail_len(n, mode);
    let mut approx_extents = extents;
    approx_extents[axis] = al;
    let mut detail_extents = extents;
    detail_extents[axis] = dl;
    let mut approx = vec![0i64; approx_extents.iter().product()];
    let mut details = vec![0i64; detail_extents.iter().product()];

    let mut line = vec![0i64; n];
    for base in line_indices(extents, axis) {
        for (s, v) in line.iter_mut().enumerate() {
            let mut idx = base;
            idx[axis] = s;
            *v = data[flat(idx, extents)];
        }
        let pair = analyze(&line, mode);
        for (s, &v) in pair.approx.iter().enumerate() {
            let mut idx = base;
            idx[axis] = s;
            approx[flat(idx, approx_extents)] = v;
        }
        for (s, &v) in pair.details.iter().enumerate() {
            let mut idx = base;
            idx[axis] = s;
            details[flat(idx, detail_extents)] = v;
        }
    }
    AxisLift {
        approx,
        details,
        approx_extents,
        detail_extents,
    }
}

/// Exact inverse of [`analyze_axis`]; `input_extent` is the fine extent along
/// the axis.
pub fn synthesize_axis(
    lift: &AxisLift,
    axis: usize,
    input_extent: usize,
    mode: LiftMode,
) -> Result<Vec<i64>> {
    let mut extents = lift.approx_extents;
    extents[axis] = input_extent;
    let mut data = vec![0i64; extents.iter().product()];
    let al = lift.approx_extents[axis];
    let dl = lift.detail_extents[axis];
    for base in line_indices(extents, axis) {
        let mut pair = LiftPair {
            approx: Vec::with_capacity(al),
            details: Vec::with_capacity(dl),
            input_len: input_extent,
        };
        for s in 0..al {
            let mut idx = base;
            idx[axis] = s;
            pair.approx.push(lift.approx[flat(idx, lift.approx_extents)]);
        }
        for s in 0..dl {
            let mut idx = base;
            idx[axis] = s;
            pair.details
                .push(lift.details[flat(idx, lift.detail_extents)]);
        }
        let line = synthesize(&pair, mode)?;
        for (s, &v) in line.iter().enumerate() {
            let mut idx = base;
            idx[axis] = s;
            data[flat(idx, extents)] = v;
        }
    }
    Ok(data)
}
