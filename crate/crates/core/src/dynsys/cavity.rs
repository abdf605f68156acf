//! Lid-driven cavity in stream function–vorticity form on the unit square.
//!
//! The state is `[ψ; ω]`, each block `N²` long and stored row-major: node `(i, j)`
//! (x index `i`, y index `j`) sits at `j·N + i`. Row `j = N−1` is the lid, moving in
//! `+x` with speed `U`. Velocities are `u = ψ_y`, `v = −ψ_x`.

use std::ops::Range;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1};

use crate::dynsys::{FullModel, ModelFamily};
use crate::error::{Result, SirmError};
use crate::real::Real;
use crate::rom::ReducedField;
use crate::timestep::{DirichletLaplacian, LinearOperator, LinearSolveStats, Preconditioner, DEFAULT_POISSON_TOL};

/// Lid term of the wall-vorticity closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WallClosure {
    /// Second-order Thom closure, `ω_B = −2ψ_{B−1}/h² − 2U/h`.
    #[default]
    Thom,
    /// `ω_B = −2ψ_{B−1}/h² − U/h`.
    HalfLid,
}

impl WallClosure {
    fn lid_factor<T: Real>(self) -> T {
        match self {
            WallClosure::Thom => T::lit(2.0),
            WallClosure::HalfLid => T::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavitySpec<T> {
    pub n_side: usize,
    pub reynolds: T,
    pub h: T,
    pub lid_speed: T,
    pub closure: WallClosure,
    pub preconditioner: Preconditioner,
    pub poisson_tol: T,
}

impl<T: Real> CavitySpec<T> {
    pub fn new(n_side: usize, reynolds: T) -> Result<Self> {
        if n_side < 5 {
            return Err(SirmError::InvalidParameter(format!("cavity grid needs at least 5 points per side, got {n_side}")));
        }
        if !(reynolds > T::zero()) || !reynolds.is_finite() {
            return Err(SirmError::InvalidParameter(format!("Reynolds number must be positive, got {reynolds}")));
        }
        Ok(Self {
            n_side,
            reynolds,
            h: T::one() / T::from_count(n_side - 1),
            lid_speed: T::one(),
            closure: WallClosure::default(),
            preconditioner: Preconditioner::default(),
            poisson_tol: T::lit(DEFAULT_POISSON_TOL),
        })
    }

    pub fn with_lid_speed(mut self, u: T) -> Self {
        self.lid_speed = u;
        self
    }

    pub fn with_closure(mut self, closure: WallClosure) -> Self {
        self.closure = closure;
        self
    }

    pub fn with_preconditioner(mut self, p: Preconditioner) -> Self {
        self.preconditioner = p;
        self
    }

    pub fn with_poisson_tol(mut self, tol: T) -> Self {
        self.poisson_tol = tol;
        self
    }

    pub fn dim(&self) -> usize {
        2 * self.n_side * self.n_side
    }

    pub fn nodes(&self) -> usize {
        self.n_side * self.n_side
    }

    pub fn interior_side(&self) -> usize {
        self.n_side - 2
    }

    pub fn coordinate(&self, i: usize) -> T {
        self.h * T::from_count(i)
    }

    fn laplacian(&self) -> DirichletLaplacian<T> {
        DirichletLaplacian::new(self.interior_side(), self.h, self.preconditioner).with_tolerance(self.poisson_tol)
    }
}

/// Vorticity on the four walls, each indexed along the wall and including the
/// corners (which are zero).
#[derive(Debug, Clone, PartialEq)]
pub struct WallVorticity<T> {
    /// `j = 0`, indexed by `i`
    pub bottom: Vec<T>,
    /// `j = N−1`, indexed by `i`
    pub top: Vec<T>,
    /// `i = 0`, indexed by `j`
    pub left: Vec<T>,
    /// `i = N−1`, indexed by `j`
    pub right: Vec<T>,
}

/// Wall vorticity from the near-wall stream function.
pub fn thom_boundary<T: Real>(psi: ArrayView1<'_, T>, spec: &CavitySpec<T>) -> WallVorticity<T> {
    let n = spec.n_side;
    let c = -T::lit(2.0) / (spec.h * spec.h);
    let lid = -spec.closure.lid_factor::<T>() * spec.lid_speed / spec.h;
    let mut w = WallVorticity {
        bottom: vec![T::zero(); n],
        top: vec![T::zero(); n],
        left: vec![T::zero(); n],
        right: vec![T::zero(); n],
    };
    for k in 1..n - 1 {
        w.bottom[k] = c * psi[n + k];
        w.top[k] = c * psi[(n - 2) * n + k] + lid;
        w.left[k] = c * psi[k * n + 1];
        w.right[k] = c * psi[k * n + n - 2];
    }
    w
}

fn write_walls<T: Real>(n: usize, w: &WallVorticity<T>, mut omega: ArrayViewMut1<'_, T>) {
    for k in 0..n {
        omega[k] = w.bottom[k];
        omega[(n - 1) * n + k] = w.top[k];
    }
    for k in 1..n - 1 {
        omega[k * n] = w.left[k];
        omega[k * n + n - 1] = w.right[k];
    }
}

fn interior_of<T: Real>(n: usize, field: ArrayView1<'_, T>) -> Array1<T> {
    let m = n - 2;
    let mut out = Array1::zeros(m * m);
    for q in 0..m {
        for p in 0..m {
            out[p + q * m] = field[(q + 1) * n + p + 1];
        }
    }
    out
}

fn embed_interior<T: Real>(n: usize, interior: ArrayView1<'_, T>, mut field: ArrayViewMut1<'_, T>) {
    let m = n - 2;
    for q in 0..m {
        for p in 0..m {
            field[(q + 1) * n + p + 1] = interior[p + q * m];
        }
    }
}

/// Five-point Laplacian of a full field at interior nodes.
fn laplacian_interior<T: Real>(n: usize, h: T, f: ArrayView1<'_, T>) -> Array1<T> {
    let m = n - 2;
    let inv_h2 = T::one() / (h * h);
    let four = T::lit(4.0);
    let mut out = Array1::zeros(m * m);
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let c = j * n + i;
            out[(i - 1) + (j - 1) * m] = (f[c - 1] + f[c + 1] + f[c - n] + f[c + n] - four * f[c]) * inv_h2;
        }
    }
    out
}

/// `−ψ_y ω_x + ψ_x ω_y` at interior nodes, central differences.
fn bracket_interior<T: Real>(n: usize, h: T, psi: ArrayView1<'_, T>, omega: ArrayView1<'_, T>) -> Array1<T> {
    let m = n - 2;
    let s = T::one() / (T::lit(4.0) * h * h);
    let mut out = Array1::zeros(m * m);
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let c = j * n + i;
            let psi_x = psi[c + 1] - psi[c - 1];
            let psi_y = psi[c + n] - psi[c - n];
            let om_x = omega[c + 1] - omega[c - 1];
            let om_y = omega[c + n] - omega[c - n];
            out[(i - 1) + (j - 1) * m] = s * (psi_x * om_y - psi_y * om_x);
        }
    }
    out
}

/// `Sᵀ b`: accumulates wall values onto their adjacent interior nodes.
fn wall_adjoint<T: Real>(n: usize, omega_full: ArrayView1<'_, T>) -> Array1<T> {
    let m = n - 2;
    let mut out = Array1::zeros(m * m);
    for k in 1..n - 1 {
        out[k - 1] += omega_full[k];
        out[(k - 1) + (m - 1) * m] += omega_full[(n - 1) * n + k];
        out[(k - 1) * m] += omega_full[k * n];
        out[(m - 1) + (k - 1) * m] += omega_full[k * n + n - 1];
    }
    out
}

/// Implicit part: `ν Δ_h ω` on interior vorticity rows, zero elsewhere.
#[derive(Debug, Clone)]
pub struct CavityDiffusion<T: Real> {
    n: usize,
    h: T,
    inv_re: T,
    lap: DirichletLaplacian<T>,
}

impl<T: Real> LinearOperator<T> for CavityDiffusion<T> {
    fn dim(&self) -> usize {
        2 * self.n * self.n
    }

    fn apply_into(&self, x: ArrayView1<'_, T>, mut y: ArrayViewMut1<'_, T>) {
        let nn = self.n * self.n;
        y.fill(T::zero());
        let omega = x.slice(ndarray::s![nn..]);
        let lap = laplacian_interior(self.n, self.h, omega).mapv(|v| v * self.inv_re);
        embed_interior(self.n, lap.view(), y.slice_mut(ndarray::s![nn..]));
    }

    fn solve_shifted(&self, alpha: T, rhs: ArrayView1<'_, T>) -> Result<(Array1<T>, LinearSolveStats)> {
        let n = self.n;
        let nn = n * n;
        let mut y = rhs.to_owned();
        if alpha == T::zero() {
            return Ok((y, LinearSolveStats::default()));
        }
        let sigma = T::one() / (alpha * self.inv_re);
        let r_om = rhs.slice(ndarray::s![nn..]);
        let r_int = interior_of(n, r_om);
        let mut boundary = r_om.to_owned();
        embed_interior(n, Array1::zeros(r_int.len()).view(), boundary.view_mut());
        let bterm = laplacian_interior(n, self.h, boundary.view());
        let b = &r_int * sigma + &bterm;
        let (sol, stats) = self.lap.solve(sigma, b.view(), Some(r_int.view()))?;
        embed_interior(n, sol.view(), y.slice_mut(ndarray::s![nn..]));
        Ok((y, stats))
    }
}

#[derive(Debug, Clone)]
pub struct CavityModel<T: Real> {
    spec: CavitySpec<T>,
    lap: DirichletLaplacian<T>,
    diffusion: CavityDiffusion<T>,
}

pub fn make_cavity<T: Real>(spec: CavitySpec<T>) -> Result<CavityModel<T>> {
    CavityModel::new(spec)
}

impl<T: Real> CavityModel<T> {
    pub fn new(spec: CavitySpec<T>) -> Result<Self> {
        if spec.n_side < 5 || !(spec.reynolds > T::zero()) {
            return Err(SirmError::InvalidParameter("invalid cavity specification".into()));
        }
        let lap = spec.laplacian();
        let diffusion = CavityDiffusion { n: spec.n_side, h: spec.h, inv_re: T::one() / spec.reynolds, lap: lap.clone() };
        Ok(Self { spec, lap, diffusion })
    }

    pub fn spec(&self) -> &CavitySpec<T> {
        &self.spec
    }

    pub fn psi<'a>(&self, x: ArrayView1<'a, T>) -> ArrayView1<'a, T> {
        x.slice_move(ndarray::s![..self.spec.nodes()])
    }

    pub fn omega<'a>(&self, x: ArrayView1<'a, T>) -> ArrayView1<'a, T> {
        x.slice_move(ndarray::s![self.spec.nodes()..])
    }

    /// Solves `−Δψ = ω` at interior nodes with `ψ = 0` on the walls.
    pub fn solve_stream(&self, omega: ArrayView1<'_, T>, guess: Option<ArrayView1<'_, T>>) -> Result<(Array1<T>, LinearSolveStats)> {
        let n = self.spec.n_side;
        let rhs = interior_of(n, omega);
        let g = guess.map(|g| interior_of(n, g));
        let (sol, stats) = self.lap.solve(T::zero(), rhs.view(), g.as_ref().map(|g| g.view()))?;
        let mut psi = Array1::zeros(self.spec.nodes());
        embed_interior(n, sol.view(), psi.view_mut());
        Ok((psi, stats))
    }

    /// Tangent `[ψ_t; ω_t]` evaluated on the constraint-consistent version of `x`.
    fn tangent(&self, x: ArrayView1<'_, T>) -> Result<Array1<T>> {
        let n = self.spec.n_side;
        let nn = self.spec.nodes();
        let (psi, _) = self.solve_stream(self.omega(x), Some(self.psi(x)))?;
        let mut omega = self.omega(x).to_owned();
        write_walls(n, &thom_boundary(psi.view(), &self.spec), omega.view_mut());

        let inv_re = T::one() / self.spec.reynolds;
        let mut w = bracket_interior(n, self.spec.h, psi.view(), omega.view());
        w.scaled_add(inv_re, &laplacian_interior(n, self.spec.h, omega.view()));

        let (psi_t_int, _) = self.lap.solve(T::zero(), w.view(), None)?;
        let mut f = Array1::zeros(2 * nn);
        embed_interior(n, psi_t_int.view(), f.slice_mut(ndarray::s![..nn]));
        let psi_t = f.slice(ndarray::s![..nn]).to_owned();
        let walls = thom_boundary(psi_t.view(), &self.spec.with_lid_speed(T::zero()));
        let mut om_t = f.slice_mut(ndarray::s![nn..]);
        embed_interior(n, w.view(), om_t.view_mut());
        write_walls(n, &walls, om_t);
        Ok(f)
    }

    /// Horizontal velocity `u = ψ_y` along the vertical centreline `x = 1/2`, as `(y, u)`.
    pub fn centerline_u(&self, x: ArrayView1<'_, T>) -> Vec<(T, T)> {
        let n = self.spec.n_side;
        let psi = self.psi(x);
        let i = (n - 1) / 2;
        let inv_2h = T::one() / (T::lit(2.0) * self.spec.h);
        (0..n)
            .map(|j| {
                let u = if j == 0 {
                    T::zero()
                } else if j == n - 1 {
                    self.spec.lid_speed
                } else {
                    (psi[(j + 1) * n + i] - psi[(j - 1) * n + i]) * inv_2h
                };
                (self.spec.coordinate(j), u)
            })
            .collect()
    }

    /// Vertical velocity `v = −ψ_x` along the horizontal centreline `y = 1/2`, as `(x, v)`.
    pub fn centerline_v(&self, x: ArrayView1<'_, T>) -> Vec<(T, T)> {
        let n = self.spec.n_side;
        let psi = self.psi(x);
        let j = (n - 1) / 2;
        let inv_2h = T::one() / (T::lit(2.0) * self.spec.h);
        (0..n)
            .map(|i| {
                let v = if i == 0 || i == n - 1 {
                    T::zero()
                } else {
                    -(psi[j * n + i + 1] - psi[j * n + i - 1]) * inv_2h
                };
                (self.spec.coordinate(i), v)
            })
            .collect()
    }

    /// Stream function as an `N×N` matrix, row index `j` (y), column index `i` (x).
    pub fn stream_matrix(&self, x: ArrayView1<'_, T>) -> Array2<T> {
        let n = self.spec.n_side;
        self.psi(x).to_owned().into_shape_with_order((n, n)).expect("ψ block is N² long")
    }
}

impl<T: Real> FullModel<T> for CavityModel<T> {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn initial_state(&self) -> Array1<T> {
        let mut x = Array1::zeros(self.dim());
        self.enforce_constraints(&mut x).expect("zero state is always consistent");
        x
    }

    fn explicit_part(&self, _t: T, x: ArrayView1<'_, T>) -> Result<Array1<T>> {
        self.check_len(x)?;
        let mut f = self.tangent(x)?;
        f -= &self.diffusion.apply(x);
        Ok(f)
    }

    fn eval_field(&self, _t: T, x: ArrayView1<'_, T>) -> Result<Array1<T>> {
        self.check_len(x)?;
        self.tangent(x)
    }

    fn stiff_operator(&self) -> Option<&dyn LinearOperator<T>> {
        Some(&self.diffusion)
    }

    fn field_blocks(&self) -> Vec<Range<usize>> {
        let nn = self.spec.nodes();
        vec![0..nn, nn..2 * nn]
    }

    fn enforce_constraints(&self, x: &mut Array1<T>) -> Result<()> {
        self.check_len(x.view())?;
        let nn = self.spec.nodes();
        let (psi, _) = self.solve_stream(self.omega(x.view()), Some(self.psi(x.view())))?;
        let walls = thom_boundary(psi.view(), &self.spec);
        x.slice_mut(ndarray::s![..nn]).assign(&psi);
        write_walls(self.spec.n_side, &walls, x.slice_mut(ndarray::s![nn..]));
        Ok(())
    }

    fn cfl_number(&self, x: ArrayView1<'_, T>, dt: T) -> Option<T> {
        let n = self.spec.n_side;
        let psi = self.psi(x);
        let inv_2h = T::one() / (T::lit(2.0) * self.spec.h);
        let mut peak = self.spec.lid_speed.abs();
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let c = j * n + i;
                let u = (psi[c + n] - psi[c - n]) * inv_2h;
                let v = (psi[c + 1] - psi[c - 1]) * inv_2h;
                peak = peak.max(u.abs() + v.abs());
            }
        }
        Some(peak * dt / self.spec.h)
    }

    fn galerkin(&self, phi: ArrayView2<'_, T>) -> Result<Option<Box<dyn ReducedField<T>>>> {
        Ok(Some(Box::new(CavityGalerkin::new(self, phi)?)))
    }

    fn family(&self) -> Option<ModelFamily<T>> {
        Some(ModelFamily::Cavity(self.spec))
    }
}

impl<T: Real> CavityModel<T> {
    fn check_len(&self, x: ArrayView1<'_, T>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(SirmError::ShapeMismatch(format!("state has length {}, expected {}", x.len(), self.dim())));
        }
        Ok(())
    }
}

/// Exact Galerkin form of the cavity field, `Φᵀ f(Φz) = c + A z + Q (z ⊗ z)`.
///
/// `f` is affine in the wall values and quadratic through the advection bracket, so
/// the three tensors are assembled once per basis and each reduced evaluation costs
/// `O(k³)` instead of two Poisson solves on the full grid.
#[derive(Debug, Clone)]
pub struct CavityGalerkin<T> {
    c: Array1<T>,
    a: Array2<T>,
    q: Array2<T>,
}

impl<T: Real> CavityGalerkin<T> {
    pub fn new(model: &CavityModel<T>, phi: ArrayView2<'_, T>) -> Result<Self> {
        let spec = model.spec;
        let n = spec.n_side;
        let nn = spec.nodes();
        let h = spec.h;
        if phi.nrows() != 2 * nn {
            return Err(SirmError::ShapeMismatch("basis rows do not match the cavity state".into()));
        }
        let k = phi.ncols();
        let inv_re = T::one() / spec.reynolds;
        let lap = &model.lap;

        // lid-only vorticity (interior zero) and its contribution
        let zero_psi = Array1::zeros(nn);
        let mut omega0 = Array1::zeros(nn);
        write_walls(n, &thom_boundary(zero_psi.view(), &spec), omega0.view_mut());
        let w0 = laplacian_interior(n, h, omega0.view()).mapv(|v| v * inv_re);

        let still = spec.with_lid_speed(T::zero());
        let mut psis = Vec::with_capacity(k);
        let mut omegas = Vec::with_capacity(k);
        let mut g = Array2::zeros((w0.len(), k));
        let two_over_h2 = T::lit(2.0) / (h * h);
        for a in 0..k {
            let col = phi.column(a);
            let om_a = col.slice(ndarray::s![nn..]);
            let (psi_a, _) = model.solve_stream(om_a, None)?;
            let mut omt = Array1::zeros(nn);
            embed_interior(n, interior_of(n, om_a).view(), omt.view_mut());
            write_walls(n, &thom_boundary(psi_a.view(), &still), omt.view_mut());

            let mut v = interior_of(n, col.slice(ndarray::s![..nn]));
            v.scaled_add(-two_over_h2, &wall_adjoint(n, om_a));
            let (inv_v, _) = lap.solve(T::zero(), v.view(), None)?;
            let mut ga = interior_of(n, om_a);
            ga += &inv_v;
            g.column_mut(a).assign(&ga);
            psis.push(psi_a);
            omegas.push(omt);
        }

        let gt = g.t();
        let c = gt.dot(&w0);
        let mut w1 = Array2::zeros((w0.len(), k));
        for a in 0..k {
            let mut col = bracket_interior(n, h, psis[a].view(), omega0.view());
            col.scaled_add(inv_re, &laplacian_interior(n, h, omegas[a].view()));
            w1.column_mut(a).assign(&col);
        }
        let a_mat = gt.dot(&w1);
        // columns without a vorticity part have ψ_a = 0 and ω̃_a = 0
        let active: Vec<usize> =
            (0..k).filter(|&a| phi.column(a).slice(ndarray::s![nn..]).iter().any(|v| *v != T::zero())).collect();
        let pairs: Vec<(usize, usize)> = active.iter().flat_map(|&a| active.iter().map(move |&b| (a, b))).collect();
        let mut w2 = Array2::zeros((w0.len(), pairs.len()));
        for (col_idx, &(a, b)) in pairs.iter().enumerate() {
            let col = bracket_interior(n, h, psis[a].view(), omegas[b].view());
            w2.column_mut(col_idx).assign(&col);
        }
        let q_active = gt.dot(&w2);
        let mut q = Array2::zeros((k, k * k));
        for (col_idx, &(a, b)) in pairs.iter().enumerate() {
            q.column_mut(a * k + b).assign(&q_active.column(col_idx));
        }
        Ok(Self { c, a: a_mat, q })
    }
}

impl<T: Real> ReducedField<T> for CavityGalerkin<T> {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn eval(&self, _t: T, z: ArrayView1<'_, T>) -> Result<Array1<T>> {
        let k = z.len();
        let mut zz = Array1::zeros(k * k);
        for a in 0..k {
            for b in 0..k {
                zz[a * k + b] = z[a] * z[b];
            }
        }
        let mut out = self.c.clone();
        out += &self.a.dot(&z);
        out += &self.q.dot(&zz);
        Ok(out)
    }
}

/// Bilinear interpolation between nested cavity grids (`(N_f − 1)` a multiple of `(N_c − 1)`).
pub(crate) fn bilinear_refine<T: Real>(coarse: ArrayView1<'_, T>, nc: usize, nf: usize) -> Result<Array1<T>> {
    if nc < 2 || nf < nc || (nf - 1) % (nc - 1) != 0 {
        return Err(SirmError::InvalidParameter(format!("grids {nc} and {nf} are not nested")));
    }
    let r = (nf - 1) / (nc - 1);
    let inv_r = T::one() / T::from_count(r);
    let mut out = Array1::zeros(nf * nf);
    for j in 0..nf {
        let (jc, fj) = ((j / r).min(nc - 2), j - (j / r).min(nc - 2) * r);
        let wy = T::from_count(fj) * inv_r;
        for i in 0..nf {
            let (ic, fi) = ((i / r).min(nc - 2), i - (i / r).min(nc - 2) * r);
            let wx = T::from_count(fi) * inv_r;
            let v00 = coarse[jc * nc + ic];
            let v10 = coarse[jc * nc + ic + 1];
            let v01 = coarse[(jc + 1) * nc + ic];
            let v11 = coarse[(jc + 1) * nc + ic + 1];
            let one = T::one();
            out[j * nf + i] = (one - wy) * ((one - wx) * v00 + wx * v10) + wy * ((one - wx) * v01 + wx * v11);
        }
    }
    Ok(out)
}

/// Nodal injection from a fine cavity grid onto a nested coarse grid.
pub(crate) fn inject<T: Real>(fine: ArrayView1<'_, T>, nf: usize, nc: usize) -> Result<Array1<T>> {
    if nc < 2 || nf < nc || (nf - 1) % (nc - 1) != 0 {
        return Err(SirmError::InvalidParameter(format!("grids {nf} and {nc} are not nested")));
    }
    let r = (nf - 1) / (nc - 1);
    let view = fine.to_shape((nf, nf)).map_err(|e| SirmError::ShapeMismatch(e.to_string()))?;
    let sub = view.slice(ndarray::s![..;r, ..;r]);
    Ok(sub.iter().copied().collect())
}

/// Splits a cavity state into its `ψ` and `ω` fields as `N×N` matrices.
pub fn split_fields<T: Real>(x: ArrayView1<'_, T>, n_side: usize) -> (Array2<T>, Array2<T>) {
    let nn = n_side * n_side;
    let to_mat = |v: ArrayView1<'_, T>| v.to_owned().into_shape_with_order((n_side, n_side)).expect("N² block");
    (to_mat(x.slice(ndarray::s![..nn])), to_mat(x.slice(ndarray::s![nn..])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(a: &Array1<f64>) -> f64 {
        a.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    #[test]
    fn benchmark_dimension() {
        let spec = CavitySpec::new(129, 1000.0).unwrap();
        assert_eq!(make_cavity(spec).unwrap().dim(), 33282);
    }

    #[test]
    fn thom_examples_half_lid() {
        let spec = CavitySpec::<f64>::new(17, 100.0).unwrap().with_closure(WallClosure::HalfLid);
        let psi = Array1::zeros(spec.nodes());
        let w = thom_boundary(psi.view(), &spec);
        assert!(w.top[1..16].iter().all(|&v| (v + 16.0).abs() < 1e-12));
        let fine = CavitySpec::<f64>::new(129, 1000.0).unwrap().with_closure(WallClosure::HalfLid);
        let w = thom_boundary(Array1::zeros(fine.nodes()).view(), &fine);
        assert!((w.top[64] + 128.0).abs() < 1e-10);
        assert!(w.bottom.iter().chain(&w.left).chain(&w.right).all(|&v| v == 0.0));
    }

    #[test]
    fn thom_examples_second_order() {
        let spec = CavitySpec::<f64>::new(129, 1000.0).unwrap();
        let w = thom_boundary(Array1::zeros(spec.nodes()).view(), &spec);
        assert!((w.top[64] + 256.0).abs() < 1e-10);
        assert_eq!(w.top[0], 0.0);
        assert_eq!(w.top[128], 0.0);
    }

    #[test]
    fn thom_isolates_stream_term() {
        let spec = CavitySpec::<f64>::new(17, 100.0).unwrap().with_lid_speed(0.0);
        let n = 17;
        let mut psi = Array1::zeros(spec.nodes());
        psi[15 * n + 5] = -spec.h * spec.h / 2.0;
        let w = thom_boundary(psi.view(), &spec);
        assert!((w.top[5] - 1.0).abs() < 1e-12);
        let all_zero = thom_boundary(Array1::zeros(spec.nodes()).view(), &spec);
        assert!(all_zero.top.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quiescent_cavity_is_fixed_point() {
        let spec = CavitySpec::new(17, 1000.0).unwrap().with_lid_speed(0.0);
        let m = make_cavity(spec).unwrap();
        let x = m.initial_state();
        assert!(x.iter().all(|&v| v == 0.0));
        assert!(max_abs(&m.eval_field(0.0, x.view()).unwrap()) == 0.0);
    }

    #[test]
    fn explicit_plus_stiff_is_field() {
        let spec = CavitySpec::new(17, 100.0).unwrap();
        let m = make_cavity(spec).unwrap();
        let x: Array1<f64> = (0..m.dim()).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let f = m.eval_field(0.0, x.view()).unwrap();
        let g = m.explicit_part(0.0, x.view()).unwrap();
        let l = m.stiff_operator().unwrap().apply(x.view());
        let err = max_abs(&(&f - &(&g + &l)));
        assert!(err < 1e-10 * max_abs(&f));
    }

    #[test]
    fn diffusion_solve_inverts_shifted_operator() {
        let spec = CavitySpec::new(17, 100.0).unwrap();
        let m = make_cavity(spec).unwrap();
        let l = m.stiff_operator().unwrap();
        let y: Array1<f64> = (0..m.dim()).map(|i| ((i * 31) % 17) as f64 - 8.0).collect();
        let alpha = 0.005;
        let rhs = &y - &l.apply(y.view()).mapv(|v| v * alpha);
        let (back, _) = l.solve_shifted(alpha, rhs.view()).unwrap();
        assert!(max_abs(&(&back - &y)) < 1e-9);
    }

    #[test]
    fn injection_and_bilinear_round_trip() {
        let nf = 9;
        let nc = 5;
        let coarse: Array1<f64> = (0..nc * nc).map(|i| i as f64).collect();
        let fine = bilinear_refine(coarse.view(), nc, nf).unwrap();
        let back = inject(fine.view(), nf, nc).unwrap();
        assert_eq!(back, coarse);
        assert!(bilinear_refine(coarse.view(), 5, 8).is_err());
    }
}
