use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use dicke3_core::analysis::{pencil, phase_diagram, separatrix_lambda, separatrix_v, separatrix_xi, Frame, ScanOptions};
use dicke3_core::basis::{enumerate_basis_with_limit, BasisSet, BasisState, Level};
use dicke3_core::model::{
    build_hamiltonian, build_rotated_hamiltonian, rotated_parameters, Branch, Configuration, ModelConfig,
};
use dicke3_core::operators::{collective_a, parity, OperatorMatrix};
use dicke3_core::protocol::{rabi_demo, retrieve, store};
use dicke3_core::rotations::{decoupling_angle, transform_exact, transform_generator_closed_form, RotationSpec};
use dicke3_core::solver::{converge_cutoff_with, diagonalize, evolve, ground_state, populations, QuantumState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{invalid, max_dim, RunConfig};
use crate::output::{Cell, Table};

const FRAMES: [Frame; 3] = [Frame::Unrotated, Frame::Rotated(Branch::First), Frame::Rotated(Branch::Second)];

fn frame_tag(f: Frame) -> &'static str {
    match f {
        Frame::Unrotated => "unrotated",
        Frame::Rotated(Branch::First) => "branch1",
        Frame::Rotated(Branch::Second) => "branch2",
    }
}

fn hamiltonian(m: &ModelConfig, b: &Arc<BasisSet>, frame: Frame) -> anyhow::Result<OperatorMatrix> {
    Ok(match frame {
        Frame::Unrotated => build_hamiltonian(m, b)?,
        Frame::Rotated(br) => build_rotated_hamiltonian(m, b, br)?,
    })
}

/// Cutoff from the config, or converged for `at`.
fn cutoff(rc: &RunConfig, at: &ModelConfig) -> anyhow::Result<usize> {
    match rc.nmax {
        Some(n) => Ok(n),
        None => Ok(converge_cutoff_with(at, &rc.cutoff_policy())?),
    }
}

fn dense_basis(na: usize, nmax: usize) -> anyhow::Result<Arc<BasisSet>> {
    Ok(Arc::new(enumerate_basis_with_limit(na, nmax, max_dim()?)?))
}

fn plane_names(cfg: Configuration) -> (&'static str, &'static str) {
    let (a, b) = cfg.plane();
    (a.name(), b.name())
}

pub fn spectrum(rc: &RunConfig) -> anyhow::Result<()> {
    let m = rc.model()?;
    let frame = rc.frame()?;
    let nmax = cutoff(rc, &m)?;
    let m = m.with_nmax(nmax);
    let b = dense_basis(m.na, nmax)?;
    let sp = diagonalize(&hamiltonian(&m, &b, frame)?)?;
    let pi = parity(&b, m.configuration);

    // with λ̃ = 0 the isolated-level occupation is conserved and labels bands
    let band = match frame {
        Frame::Rotated(br) if rotated_parameters(&m, br)?.lambda_t == 0.0 => Some(m.configuration.isolated_level(br)),
        _ => None,
    };
    let mut columns = vec!["index", "energy", "parity"];
    if band.is_some() {
        columns.push("n_isolated");
    }
    let mut t = Table::new(&columns, rc);
    t.meta("nmax", nmax).meta("dim", b.dim()).meta("frame", frame_tag(frame));
    if let Some(l) = band {
        t.meta("isolated_level", l);
    }
    for k in 0..sp.len() {
        let s = sp.state(k);
        let p = s.expectation(&pi)?;
        let mut row: Vec<Cell> = vec![k.into(), sp.eigenvalues()[k].into(), (p.round() as i64).into()];
        if let Some(l) = band {
            let n = populations(&s).level(l);
            if (n - n.round()).abs() > 1e-8 {
                return Err(dicke3_core::Error::Numerical(format!(
                    "eigenvector {k} has non-integer isolated-level occupation {n}"
                ))
                .into());
            }
            row.push((n.round() as i64).into());
        }
        t.row(row);
    }
    t.write(rc.out.as_deref())
}

fn grid(rc: &RunConfig) -> anyhow::Result<Vec<f64>> {
    let n = rc.grid_points.unwrap_or(21);
    let top = rc.mu_max.unwrap_or(2.0);
    if n < 2 || !(top > 0.0 && top.is_finite()) {
        return Err(invalid("population grids need at least two points and a positive range"));
    }
    Ok((0..n).map(|k| top * k as f64 / (n - 1) as f64).collect())
}

fn out_dir(rc: &RunConfig) -> PathBuf {
    rc.out.clone().unwrap_or_else(|| PathBuf::from("."))
}

pub fn populations_cmd(rc: &RunConfig) -> anyhow::Result<()> {
    let m = rc.model()?;
    let axis = grid(rc)?;
    let top = *axis.last().expect("non-empty grid");
    let nmax = cutoff(rc, &m.at_plane_point(top, top))?;
    let m = m.with_nmax(nmax);
    let b = Arc::new(enumerate_basis_with_limit(m.na, nmax, usize::MAX)?);
    let points: Vec<(f64, f64)> = axis.iter().flat_map(|&a| axis.iter().map(move |&c| (a, c))).collect();
    let (na, nb) = plane_names(m.configuration);
    let dir = out_dir(rc);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    for frame in FRAMES {
        let rows = points
            .par_iter()
            .filter(|(a, c)| frame == Frame::Unrotated || *a != 0.0 || *c != 0.0)
            .map(|&(a, c)| {
                let mm = m.at_plane_point(a, c);
                let gs = ground_state(&hamiltonian(&mm, &b, frame)?)?;
                Ok((a, c, gs.energy, populations(&gs.state)))
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        let mut t = Table::new(&[na, nb, "a11", "a22", "a33", "photons", "energy"], rc);
        t.meta("nmax", nmax).meta("frame", frame_tag(frame));
        if frame != Frame::Unrotated {
            t.meta("note", "origin omitted: the decoupling angle is undefined there");
        }
        for (a, c, e, p) in rows {
            t.row(vec![a.into(), c.into(), p.a11.into(), p.a22.into(), p.a33.into(), p.photons.into(), e.into()]);
        }
        t.write(Some(&dir.join(format!("populations_{}.csv", frame_tag(frame)))))?;
    }
    Ok(())
}

pub fn phase_diagram_cmd(rc: &RunConfig) -> anyhow::Result<()> {
    let m = rc.model()?;
    let defaults = ScanOptions::default();
    let opts = ScanOptions {
        s_max: rc.mu_max.unwrap_or(defaults.s_max),
        dmu: rc.dmu.unwrap_or(defaults.dmu),
        frame: rc.frame()?,
        refine: rc.refine.unwrap_or(false),
        keep_states: false,
        cutoff: rc.cutoff_policy(),
    };
    let rays = rc.rays.unwrap_or(dicke3_core::analysis::DEFAULT_PENCIL);
    let d = phase_diagram(&m, &pencil(rays), &opts)?;
    let (na, nb) = plane_names(m.configuration);
    let mut t = Table::new(&["theta", "s", na, nb, "fidelity", "susceptibility", "nmax"], rc);
    t.meta("frame", frame_tag(opts.frame)).meta("rays", rays).meta("dmu", opts.dmu);
    for r in &d.rays {
        let theta = r.theta().unwrap_or(f64::NAN);
        for mn in &r.minima {
            t.row(vec![
                theta.into(),
                mn.s.into(),
                mn.mu_a.into(),
                mn.mu_b.into(),
                mn.fidelity.into(),
                mn.susceptibility.into(),
                r.nmax.into(),
            ]);
        }
    }
    t.write(rc.out.as_deref())
}

pub fn separatrix_cmd(rc: &RunConfig) -> anyhow::Result<()> {
    let m = rc.model()?;
    let n = rc.samples.unwrap_or(201).max(2);
    let top = rc.mu_max.unwrap_or(2.0);
    let w21 = m.gap(Level::Two, Level::One);
    let w31 = m.gap(Level::Three, Level::One);
    let (na, nb) = plane_names(m.configuration);
    let mut t = Table::new(&[na, nb], rc);
    t.meta("omega21", crate::output::fmt_num(w21)).meta("omega31", crate::output::fmt_num(w31));
    for k in 0..n {
        let f = k as f64 / (n - 1) as f64;
        let point = match m.configuration {
            Configuration::Xi => separatrix_xi(m.omega, w21, w31, f * top)?.map(|mu12| (mu12, f * top)),
            Configuration::Lambda => separatrix_lambda(m.omega, w21, w31, f * top)?.map(|mu13| (mu13, f * top)),
            Configuration::V => {
                let theta = f * FRAC_PI_2;
                let r = separatrix_v(m.omega, w21, w31, theta)?;
                Some((r * theta.cos(), r * theta.sin()))
            }
        };
        if let Some((a, b)) = point {
            t.row(vec![a.into(), b.into()]);
        }
    }
    t.write(rc.out.as_deref())
}

pub fn store_retrieve_cmd(rc: &RunConfig) -> anyhow::Result<()> {
    let m = rc.model()?;
    if m.configuration == Configuration::Xi {
        return Err(dicke3_core::Error::InvalidConfig(
            "the Ξ configuration has no decoupled level that can store a qubit; use Λ or V".into(),
        )
        .into());
    }
    let nmax = cutoff(rc, &m)?;
    let m = m.with_nmax(nmax);
    let b = Arc::new(enumerate_basis_with_limit(m.na, nmax, usize::MAX)?);
    let gs = ground_state(&build_hamiltonian(&m, &b)?)?;
    let stored = store(&m, &gs.state)?;
    let back = retrieve(&m, &stored.state)?;
    let overlap = stored.content.overlap(&back.content);

    let mut t = Table::new(
        &["stage", "a11", "a22", "a33", "photons", "isolated_level", "isolated_population", "content_weight"],
        rc,
    );
    t.meta("nmax", nmax)
        .meta("alpha_store", crate::output::fmt_num(decoupling_angle(&m, Branch::First)?))
        .meta("alpha_retrieve", crate::output::fmt_num(decoupling_angle(&m, Branch::Second)?))
        .meta("overlap", crate::output::fmt_num(overlap))
        .meta("approximate", stored.approximate);
    let lab = populations(&gs.state);
    t.row(vec!["ground".into(), lab.a11.into(), lab.a22.into(), lab.a33.into(), lab.photons.into(), "".into(), "".into(), "".into()]);
    for (stage, fs) in [("stored", &stored), ("retrieved", &back)] {
        let p = populations(&fs.state);
        t.row(vec![
            stage.into(),
            p.a11.into(),
            p.a22.into(),
            p.a33.into(),
            p.photons.into(),
            fs.content.isolated.label().into(),
            fs.isolated_population.into(),
            fs.content.weight().into(),
        ]);
    }
    if stored.approximate {
        eprintln!(
            "warning: levels of the active pair are not degenerate; isolated population after storing is {:.3e}",
            stored.isolated_population
        );
    }
    t.write(rc.out.as_deref())
}

pub fn rotate_check_cmd(rc: &RunConfig) -> anyhow::Result<()> {
    let na_max = rc.na.unwrap_or(3);
    let samples = rc.samples.unwrap_or(20);
    if na_max == 0 || samples == 0 {
        return Err(invalid("rotate-check needs at least one atom and one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rc.seed.unwrap_or(0));
    let mut t = Table::new(&["j", "k", "l", "m", "max_error"], rc);
    let mut overall: f64 = 0.0;
    let bases: Vec<Arc<BasisSet>> =
        (1..=na_max).map(|na| dense_basis(na, 0)).collect::<anyhow::Result<_>>()?;
    for cfg in Configuration::ALL {
        let (j, k) = cfg.rotation_pair();
        let angles: Vec<f64> = (0..samples).map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
        for l in Level::ALL {
            for mm in Level::ALL {
                let mut worst: f64 = 0.0;
                for b in &bases {
                    for &alpha in &angles {
                        let spec = RotationSpec::new(j, k, alpha)?;
                        let closed = transform_generator_closed_form(&spec, l, mm, b)?;
                        let exact = transform_exact(&spec, &collective_a(b, l, mm), b)?;
                        worst = worst.max(closed.max_abs_diff(&exact)?);
                    }
                }
                overall = overall.max(worst);
                t.row(vec![j.label().into(), k.label().into(), l.label().into(), mm.label().into(), worst.into()]);
            }
        }
    }
    t.meta("max_error", crate::output::fmt_num(overall));
    t.write(rc.out.as_deref())
}

fn time_grid(rc: &RunConfig) -> anyhow::Result<Vec<f64>> {
    let t_max = rc.t_max.unwrap_or(50.0);
    let dt = rc.dt.unwrap_or(0.25);
    if !(dt > 0.0 && t_max >= 0.0 && t_max.is_finite()) {
        return Err(invalid("evolution needs dt > 0 and a finite t_max ≥ 0"));
    }
    let n = (t_max / dt + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| i as f64 * dt).collect())
}

pub fn evolve_cmd(rc: &RunConfig) -> anyhow::Result<()> {
    let m = rc.model()?;
    let times = time_grid(rc)?;
    if rc.rabi.unwrap_or(false) {
        let nmax = rc.nmax.unwrap_or(40);
        let series = rabi_demo(&m.with_nmax(nmax), rc.nu0.unwrap_or(0), &times)?;
        let mut t = Table::new(
            &[
                "t", "stored_a11", "stored_a22", "stored_a33", "stored_photons", "retrieved_a11", "retrieved_a22",
                "retrieved_a33", "retrieved_photons",
            ],
            rc,
        );
        t.meta("nmax", nmax);
        for ((time, s), r) in series.times.iter().zip(&series.stored).zip(&series.retrieved) {
            t.row(vec![
                (*time).into(),
                s.a11.into(),
                s.a22.into(),
                s.a33.into(),
                s.photons.into(),
                r.a11.into(),
                r.a22.into(),
                r.a33.into(),
                r.photons.into(),
            ]);
        }
        return t.write(rc.out.as_deref());
    }

    let init = rc
        .initial
        .as_ref()
        .ok_or_else(|| invalid("evolve needs --initial nu,n1,n2,n3 or --rabi"))?;
    if init.len() != 4 {
        return Err(invalid(format!("--initial takes four numbers nu,n1,n2,n3, got {}", init.len())));
    }
    let s0 = BasisState::new(init[0], init[1], init[2], init[3]);
    let frame = rc.frame()?;
    let nmax = cutoff(rc, &m)?;
    let m = m.with_nmax(nmax);
    let b = dense_basis(m.na, nmax)?;
    let psi0 = QuantumState::basis_state(b.clone(), &s0)?;
    let sp = diagonalize(&hamiltonian(&m, &b, frame)?)?;
    let mut t = Table::new(&["t", "a11", "a22", "a33", "photons", "norm"], rc);
    t.meta("nmax", nmax).meta("frame", frame_tag(frame)).meta("initial", s0);
    for &time in &times {
        let psi = evolve(&sp, &psi0, time)?;
        let p = populations(&psi);
        t.row(vec![time.into(), p.a11.into(), p.a22.into(), p.a33.into(), p.photons.into(), psi.norm().into()]);
    }
    t.write(rc.out.as_deref())
}

