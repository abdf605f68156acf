//! Dynamic iteration using reduced models: each subsystem is solved in full while
//! every other subsystem is represented by its own POD basis.

use std::time::Instant;

use ndarray::{s, Array1, Array2};

use crate::dynsys::FullModel;
use crate::error::{Result, SirmError};
use crate::linalg::norm2;
use crate::real::Real;
use crate::rom::{assemble_information_matrix, build_reduced_model, thin_svd, Basis};
use crate::sirm::{build_trial, lift_samples, sample_times, ConvergenceReport, IterationRecord, SirmConfig};
use crate::timestep::{integrate_reduced_model, IntegratorConfig, Trajectory};

/// Per-subsystem size of the coupled reduced problem, maximised over subsystems.
pub fn dirm_effective_dimension(partition: &[usize], modes_per_block: usize) -> usize {
    let reduced: Vec<usize> = partition.iter().map(|&s| modes_per_block.min(s)).collect();
    let total: usize = reduced.iter().sum();
    partition
        .iter()
        .zip(&reduced)
        .map(|(&size, &r)| total - r + size)
        .max()
        .unwrap_or(0)
}

fn block_offsets(partition: &[usize]) -> Vec<usize> {
    let mut off = vec![0];
    for &s in partition {
        off.push(off.last().copied().unwrap_or(0) + s);
    }
    off
}

/// Exactly `modes` orthonormal columns for one block: leading left singular vectors
/// of the block rows, completed with canonical directions when the block is rank
/// deficient.
fn block_basis<T: Real>(rows: ndarray::ArrayView2<'_, T>, modes: usize) -> Array2<T> {
    let size = rows.nrows();
    let modes = modes.min(size);
    let mut cols: Vec<Array1<T>> = Vec::with_capacity(modes);
    if rows.iter().any(|&v| v != T::zero()) {
        let svd = thin_svd(rows);
        let s = &svd.singular_values;
        let floor = s[0] * T::epsilon() * T::from_count(size.max(rows.ncols()));
        for j in 0..s.len().min(modes) {
            if s[j] > floor {
                cols.push(svd.u.column(j).to_owned());
            }
        }
    }
    let mut e = 0;
    while cols.len() < modes && e < size {
        let mut v = Array1::zeros(size);
        v[e] = T::one();
        for _ in 0..2 {
            for q in &cols {
                let d = q.dot(&v);
                v.scaled_add(-d, q);
            }
        }
        let r = norm2(v.view());
        if r > T::lit(1e-8) {
            cols.push(v.mapv(|x| x / r));
        }
        e += 1;
    }
    let mut out = Array2::zeros((size, cols.len()));
    for (j, c) in cols.iter().enumerate() {
        out.column_mut(j).assign(c);
    }
    out
}

/// Block-diagonal basis with the identity on block `i`.
fn coupled_basis<T: Real>(offsets: &[usize], bases: &[Array2<T>], i: usize) -> Basis<T> {
    let n = *offsets.last().expect("non-empty partition");
    let cols: usize = bases
        .iter()
        .enumerate()
        .map(|(l, b)| if l == i { offsets[l + 1] - offsets[l] } else { b.ncols() })
        .sum();
    let mut phi = Array2::zeros((n, cols));
    let mut c = 0;
    for (l, b) in bases.iter().enumerate() {
        let (r0, r1) = (offsets[l], offsets[l + 1]);
        if l == i {
            for (d, r) in (r0..r1).enumerate() {
                phi[[r, c + d]] = T::one();
            }
            c += r1 - r0;
        } else {
            phi.slice_mut(s![r0..r1, c..c + b.ncols()]).assign(b);
            c += b.ncols();
        }
    }
    Basis::from_orthonormal(phi)
}

/// DIRM sweep over the subsystems in `partition` (sizes summing to the state
/// dimension), with `modes_per_block` POD modes per reduced subsystem. The report's
/// `k` is the effective coupled dimension.
pub fn dirm_solve<T: Real>(
    model: &dyn FullModel<T>,
    partition: &[usize],
    modes_per_block: usize,
    cfg: &SirmConfig<T>,
    integ: &IntegratorConfig<T>,
    reference: Option<&Trajectory<T>>,
) -> Result<(Trajectory<T>, ConvergenceReport<T>)> {
    cfg.validate()?;
    let n = model.dim();
    if partition.is_empty() || partition.iter().any(|&s| s == 0) || partition.iter().sum::<usize>() != n {
        return Err(SirmError::InvalidParameter(format!(
            "subsystem sizes must be positive and sum to {n}"
        )));
    }
    if modes_per_block == 0 {
        return Err(SirmError::InvalidParameter("modes_per_block must be positive".into()));
    }
    let offsets = block_offsets(partition);
    let x0 = model.initial_state();
    let times = sample_times(integ, cfg.m)?;
    let mut current = build_trial(model, x0.view(), &cfg.trial, integ, &times)?;
    let mut report = ConvergenceReport { records: Vec::new(), converged: false, sample_times: times.clone(), iterates: Vec::new() };
    if cfg.keep_iterates {
        report.iterates.push(current.clone());
    }
    let k_eff = dirm_effective_dimension(partition, modes_per_block);
    let rcfg = integ.with_record_every(1);
    let mut last_solves: Vec<(Basis<T>, Trajectory<T>)> = Vec::new();

    for j in 1..=cfg.max_iterations {
        let start = Instant::now();
        let y = assemble_information_matrix(&current, model, cfg.settings.gamma)?.with_column(x0.view())?;
        let bases: Vec<Array2<T>> = (0..partition.len())
            .map(|l| block_basis(y.columns.slice(s![offsets[l]..offsets[l + 1], ..]), modes_per_block))
            .collect();

        let mut next = Array2::zeros((n, times.len()));
        last_solves.clear();
        for i in 0..partition.len() {
            let basis = coupled_basis(&offsets, &bases, i);
            let rom = build_reduced_model(&basis, model)?;
            let z0 = basis.project(x0.view())?;
            let reduced = integrate_reduced_model(&rom, z0.view(), &rcfg).map_err(|e| match e {
                SirmError::NonFinite { time, .. } => SirmError::NonFinite { iteration: j, time },
                other => other,
            })?;
            let lifted = lift_samples(&basis, &reduced, &times, model)?;
            next.slice_mut(s![offsets[i]..offsets[i + 1], ..])
                .assign(&lifted.states().slice(s![offsets[i]..offsets[i + 1], ..]));
            last_solves.push((basis, reduced));
        }
        let next = Trajectory::new(times.clone(), next)?;
        let diff = (0..times.len()).fold(T::zero(), |m, c| m.max(crate::linalg::distance(next.state(c), current.state(c))));
        let true_error = match reference {
            Some(r) => Some(crate::metrics::compare_against_reference(&next, r)?.sup),
            None => None,
        };
        report.records.push(IterationRecord {
            iteration: j,
            k: k_eff,
            truncation_estimate: T::zero(),
            successive_diff: diff,
            true_error,
            wall_time: start.elapsed(),
            singular_values: Vec::new(),
        });
        if cfg.keep_iterates {
            report.iterates.push(next.clone());
        }
        current = next;
        if diff < cfg.epsilon {
            report.converged = true;
            break;
        }
    }

    let steps = integ.n_steps()?;
    let stride = integ.record_every;
    let out_times: Vec<T> = (0..=steps).filter(|&k| k % stride == 0 || k == steps).map(|k| integ.time_at(k)).collect();
    let mut states = Array2::zeros((n, out_times.len()));
    for (i, (basis, reduced)) in last_solves.iter().enumerate() {
        for (c, &t) in out_times.iter().enumerate() {
            let x = basis.lift(reduced.at(t)?.view())?;
            states.slice_mut(s![offsets[i]..offsets[i + 1], c]).assign(&x.slice(s![offsets[i]..offsets[i + 1]]));
        }
    }
    Ok((Trajectory::new(out_times, states)?, report))
}
