//! FDN representation: delay lengths, gain matrices and the block system matrix.

use nalgebra::DMatrix;

use crate::error::{FdnError, Result};

/// Lengths of the delay lines in samples. Every entry is at least one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayVector(Vec<usize>);

impl DelayVector {
    pub fn new(m: Vec<usize>) -> Result<Self> {
        if m.is_empty() {
            return Err(FdnError::InvalidDelays(
                "at least one delay line is required".into(),
            ));
        }
        if let Some(pos) = m.iter().position(|&x| x == 0) {
            return Err(FdnError::InvalidDelays(format!(
                "delay {pos} has zero length"
            )));
        }
        Ok(Self(m))
    }

    /// `n` single-sample delays.
    pub fn ones(n: usize) -> Self {
        Self(vec![1; n.max(1)])
    }

    /// Delays `[1, 2, 4, ..., 2^(n-1)]`: every subset has a distinct total length.
    pub fn powers_of_two(n: usize) -> Self {
        Self((0..n.max(1)).map(|i| 1usize << i).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total number of delay elements, the order of the system.
    pub fn system_order(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// Feedback delay network in delay state-space form.
///
/// ```text
/// y(n)     = C x(n) + D u(n)
/// x(n + m) = A x(n) + B u(n)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct FdnSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub delays: DelayVector,
}

impl FdnSystem {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        delays: DelayVector,
    ) -> Result<Self> {
        let n = delays.len();
        if a.shape() != (n, n) {
            return Err(FdnError::Dimension(format!(
                "A is {}x{} but there are {n} delay lines",
                a.nrows(),
                a.ncols()
            )));
        }
        let p = d.nrows();
        if p == 0 || d.ncols() != p {
            return Err(FdnError::Dimension(format!(
                "D must be square and non-empty, got {}x{}",
                d.nrows(),
                d.ncols()
            )));
        }
        if b.shape() != (n, p) {
            return Err(FdnError::Dimension(format!(
                "B is {}x{}, expected {n}x{p}",
                b.nrows(),
                b.ncols()
            )));
        }
        if c.shape() != (p, n) {
            return Err(FdnError::Dimension(format!(
                "C is {}x{}, expected {p}x{n}",
                c.nrows(),
                c.ncols()
            )));
        }
        Ok(Self { a, b, c, d, delays })
    }

    /// Single-input single-output system from vector gains.
    pub fn siso(
        a: DMatrix<f64>,
        b: &[f64],
        c: &[f64],
        d: f64,
        delays: DelayVector,
    ) -> Result<Self> {
        Self::new(
            a,
            DMatrix::from_column_slice(b.len(), 1, b),
            DMatrix::from_row_slice(1, c.len(), c),
            DMatrix::from_element(1, 1, d),
            delays,
        )
    }

    pub fn from_system_matrix(sys: &SystemMatrix, delays: DelayVector) -> Result<Self> {
        let (a, b, c, d) = sys.blocks();
        Self::new(a, b, c, d, delays)
    }

    /// Number of delay lines.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Number of input/output channels.
    pub fn p(&self) -> usize {
        self.d.nrows()
    }

    pub fn is_siso(&self) -> bool {
        self.p() == 1
    }

    pub fn system_matrix(&self) -> SystemMatrix {
        SystemMatrix::from_blocks(&self.a, &self.b, &self.c, &self.d)
    }

    pub fn with_delays(&self, delays: DelayVector) -> Result<Self> {
        Self::new(
            self.a.clone(),
            self.b.clone(),
            self.c.clone(),
            self.d.clone(),
            delays,
        )
    }
}

/// The `(N+P) x (N+P)` block matrix `[[A, B], [C, D]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrix {
    pub u: DMatrix<f64>,
    pub n: usize,
}

impl SystemMatrix {
    pub fn new(u: DMatrix<f64>, n: usize) -> Result<Self> {
        if !u.is_square() || n == 0 || n >= u.nrows() {
            return Err(FdnError::Dimension(format!(
                "cannot split a {}x{} matrix at {n}",
                u.nrows(),
                u.ncols()
            )));
        }
        Ok(Self { u, n })
    }

    pub fn from_blocks(
        a: &DMatrix<f64>,
        b: &DMatrix<f64>,
        c: &DMatrix<f64>,
        d: &DMatrix<f64>,
    ) -> Self {
        let n = a.nrows();
        let p = d.nrows();
        let mut u = DMatrix::zeros(n + p, n + p);
        u.view_mut((0, 0), (n, n)).copy_from(a);
        u.view_mut((0, n), (n, p)).copy_from(b);
        u.view_mut((n, 0), (p, n)).copy_from(c);
        u.view_mut((n, n), (p, p)).copy_from(d);
        Self { u, n }
    }

    pub fn p(&self) -> usize {
        self.u.nrows() - self.n
    }

    pub fn a(&self) -> DMatrix<f64> {
        self.u.view((0, 0), (self.n, self.n)).into_owned()
    }

    pub fn b(&self) -> DMatrix<f64> {
        self.u.view((0, self.n), (self.n, self.p())).into_owned()
    }

    pub fn c(&self) -> DMatrix<f64> {
        self.u.view((self.n, 0), (self.p(), self.n)).into_owned()
    }

    pub fn d(&self) -> DMatrix<f64> {
        self.u
            .view((self.n, self.n), (self.p(), self.p()))
            .into_owned()
    }

    pub fn blocks(&self) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        (self.a(), self.b(), self.c(), self.d())
    }
}
