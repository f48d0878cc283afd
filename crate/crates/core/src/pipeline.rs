//! algebra → orbit → connection → spinors → blocks → checks.

use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;
use thiserror::Error;

use crate::checks::{
    bracket_battery, clifford_suite, kahler_suite, levi_civita_routes, random_complex_model, scaling_defect,
    summarize_blocks,
};
use crate::clifford::{CliffordError, ComplexModel, FockSpace};
use crate::config::{ConfigError, ConnectionKind, MetricChoice, RunConfig};
use crate::connection::{
    full_connection, k_equivariance_defect, koszul_connection, metric_compat_defect, trace_criterion,
    ConnectionError, ConnectionLabel, ConnectionMap, EllFile,
};
use crate::dirac::{spectrum, CharacterData, DiracBlock, DiracContext, DiracError, Reduction, SpectrumEntry};
use crate::irrep::{builtin, su2_irrep, IrrepData, IrrepError, IrrepFile};
use crate::lie::{build_algebra, from_table, AlgebraSpec, LieAlgebra, LieError, StructureTable};
use crate::linalg::{cmax_abs, c, RMat, RVec};
use crate::orbit::{datum_from_z, solve_z, Orbit, OrbitError};
use crate::quadrature::{divergence_integral, galerkin_eigenvalues, standard_test_fields, EulerGrid, GalerkinGrid, QuadratureError};
use crate::report::{write_spectrum_csv, CheckOutcome, PropertyReport, RunSummary};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read {path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("algebra stage: {0}")]
    Algebra(#[from] LieError),
    #[error("orbit stage: {0}")]
    Orbit(#[from] OrbitError),
    #[error("connection stage: {0}")]
    Connection(#[from] ConnectionError),
    #[error("spinor stage: {0}")]
    Spinor(#[from] CliffordError),
    #[error("irrep stage: {0}")]
    Irrep(#[from] IrrepError),
    #[error("dirac stage: {0}")]
    Dirac(#[from] DiracError),
    #[error("oracle stage: {0}")]
    Oracle(#[from] QuadratureError),
    #[error("output stage: {0}")]
    Output(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Verify,
    Spectrum,
    Oracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Spectrum => "spectrum",
            Command::Oracle => "oracle",
        }
    }
}

/// Everything a run needs once the configuration has been resolved.
#[derive(Debug, Clone)]
pub struct Setup {
    pub orbit: Orbit,
    pub conn: ConnectionMap,
    pub g0: RMat,
    pub character: CharacterData,
    pub orientation: i8,
    pub irreps: Vec<IrrepData>,
    pub reduction: Reduction,
    pub warnings: Vec<String>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let input = |message: String| PipelineError::Input { path: path.to_path_buf(), message };
    let text = fs::read_to_string(path).map_err(|e| input(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| input(e.to_string()))
}

pub fn load_algebra(cfg: &RunConfig) -> Result<LieAlgebra, PipelineError> {
    match (&cfg.algebra.name, &cfg.algebra.table) {
        (Some(name), _) => Ok(build_algebra(&name.parse::<AlgebraSpec>()?)?),
        (_, Some(path)) => Ok(from_table(&read_json::<StructureTable>(&cfg.resolve(path))?)?),
        _ => unreachable!("validated"),
    }
}

/// The metric on 𝔪 in canonical coordinates.
pub fn metric_for(orbit: &Orbit, choice: MetricChoice) -> RMat {
    match choice {
        MetricChoice::Kahler => orbit.geom.g_metric.clone(),
        MetricChoice::Killing => {
            let b = &orbit.geom.m_sub.basis;
            b.transpose() * orbit.geom.algebra.kil() * b
        }
    }
}

pub fn builtin_connection(kind: ConnectionKind) -> Option<ConnectionLabel> {
    match kind {
        ConnectionKind::Canonical => Some(ConnectionLabel::Canonical),
        ConnectionKind::NaturalTorsionFree => Some(ConnectionLabel::NaturalTorsionFree),
        ConnectionKind::CoadjointLeviCivita => Some(ConnectionLabel::CoadjointLeviCivita),
        ConnectionKind::Custom => None,
    }
}

fn load_irreps(cfg: &RunConfig, alg: &LieAlgebra, warnings: &mut Vec<String>) -> Result<Vec<IrrepData>, PipelineError> {
    let mut out = Vec::new();
    if alg.is_su2_standard() {
        for two_j in 0..=cfg.irreps.cutoff {
            out.push(su2_irrep(alg, two_j)?);
        }
    } else if cfg.irreps.builtin.is_empty() && cfg.irreps.files.is_empty() {
        warnings.push(format!("no irreps configured for {}; add irreps.builtin or irreps.files", alg.name()));
    }
    for name in &cfg.irreps.builtin {
        out.push(builtin(alg, name)?);
    }
    for path in &cfg.irreps.files {
        out.push(IrrepData::from_file(&read_json::<IrrepFile>(&cfg.resolve(path))?, alg)?);
    }
    Ok(out)
}

pub fn prepare(cfg: &RunConfig) -> Result<Setup, PipelineError> {
    let alg = load_algebra(cfg)?;
    let (field, v) = match (&cfg.orbit.mu, &cfg.orbit.z) {
        (Some(mu), _) => ("mu", mu),
        (_, Some(z)) => ("z", z),
        _ => unreachable!("validated"),
    };
    if v.len() != alg.dim() {
        cfg.validate_dimensions(alg.dim(), 0)?;
    }
    let v = RVec::from_vec(v.clone());
    let datum = if field == "mu" { solve_z(&alg, &v)? } else { datum_from_z(&alg, &v)? };
    let orbit = Orbit::new(&alg, &datum)?;
    cfg.validate_dimensions(alg.dim(), orbit.geom.dim_k())?;
    let mut warnings = Vec::new();

    let g0 = metric_for(&orbit, cfg.connection.metric);
    let conn = match builtin_connection(cfg.connection.label) {
        Some(label) => full_connection(&label, &orbit.geom, &orbit.weights)?,
        None => {
            let path = cfg.resolve(cfg.connection.ell_file.as_ref().expect("validated"));
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let file: EllFile = read_json(&path)?;
            if file.r != orbit.r() {
                return Err(ConnectionError::DimensionMismatch { expected: orbit.r(), got: file.r }.into());
            }
            ConnectionMap::from_file(&file, &name)?
        }
    };
    let compat = metric_compat_defect(&conn, &g0);
    if compat > 1e-9 {
        warnings.push(format!(
            "connection {} is not metric-compatible (defect {compat:.3e}); only its J-linear part is lifted to spinors",
            conn.label
        ));
    }
    let reduction = if k_equivariance_defect(&orbit.geom, &conn) > 1e-9 {
        warnings.push(format!(
            "connection {} is not K-equivariant; blocks use all of Hom(V, S) without K-reduction",
            conn.label
        ));
        Reduction::Unreduced
    } else {
        Reduction::Invariant
    };
    let character = match &cfg.character.weight {
        Some(w) => CharacterData { weight: RVec::from_vec(w.clone()) },
        None => CharacterData::trivial(orbit.geom.dim_k()),
    };
    character.validate(&orbit.geom)?;
    let irreps = load_irreps(cfg, &alg, &mut warnings)?;
    for w in &warnings {
        warn!("{w}");
    }
    Ok(Setup { orbit, conn, g0, character, orientation: cfg.spinor.orientation, irreps, reduction, warnings })
}

pub fn context(setup: &Setup) -> Result<DiracContext, PipelineError> {
    Ok(DiracContext::new(&setup.orbit.geom, &setup.g0, &setup.conn, &setup.character, setup.orientation)?)
}

/// Blocks are independent; results come back in irrep order.
pub fn build_blocks(
    ctx: &DiracContext,
    irreps: &[IrrepData],
    reduction: Reduction,
) -> Result<Vec<DiracBlock>, PipelineError> {
    let blocks: Result<Vec<_>, DiracError> = irreps.par_iter().map(|ir| ctx.block(ir, reduction)).collect();
    Ok(blocks?)
}

/// Tolerances and anchors of the report checks.
struct CheckDef {
    name: &'static str,
    anchor: &'static str,
    tolerance: f64,
}

const CHECKS: [CheckDef; 12] = [
    CheckDef {
        name: "kahler_structure",
        anchor: "J^2 = -1; omega, g, J invariant under exp(t ad Z); |Gamma| = sum alpha P_alpha; g = alpha Kil on weight spaces",
        tolerance: 1e-8,
    },
    CheckDef {
        name: "levi_civita_routes",
        anchor: "weight formula = S-formula = Koszul solve; torsion-free; metric-compatible; commutes with J",
        tolerance: 1e-9,
    },
    CheckDef {
        name: "bracket_decomposition",
        anchor: "bracket of single-weight vectors splits over k, m_(a+b), m_|a-b| and intertwines J",
        tolerance: 1e-9,
    },
    CheckDef {
        name: "clifford_fock",
        anchor: "Clifford relation, kappa skew, unitary equivariance, Leibniz rule, chirality",
        tolerance: 1e-10,
    },
    CheckDef { name: "trace_criterion", anchor: "trace of the torsion vanishes in every direction", tolerance: 1e-9 },
    CheckDef { name: "dirac_hermiticity", anchor: "every Dirac block is Hermitian", tolerance: 1e-8 },
    CheckDef {
        name: "self_adjointness_iff",
        anchor: "blocks are Hermitian exactly when the trace criterion holds",
        tolerance: 0.0,
    },
    CheckDef {
        name: "chirality_anticommutation",
        anchor: "D anticommutes with chirality; Hermitian spectra are symmetric under negation",
        tolerance: 1e-8,
    },
    CheckDef {
        name: "modified_dirac",
        anchor: "D - (M - M*)/2 is Hermitian and differs from D by exactly (M - M*)/2",
        tolerance: 1e-8,
    },
    CheckDef { name: "divergence_quadrature", anchor: "integral of div V over SU(2) vanishes", tolerance: 1e-6 },
    CheckDef {
        name: "galerkin_oracle",
        anchor: "block eigenvalues equal Euler-angle Galerkin eigenvalues",
        tolerance: 1e-6,
    },
    CheckDef { name: "metric_scaling", anchor: "Z -> cZ rescales eigenvalues by c^(-1/2)", tolerance: 1e-8 },
];

pub const SCALING_FACTORS: [f64; 3] = [2.0, 3.0, 5.0];

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: PropertyReport,
    pub spectrum: Option<Vec<SpectrumEntry>>,
}

struct Battery<'a> {
    cfg: &'a RunConfig,
    command: Command,
    scale: f64,
    out: Vec<CheckOutcome>,
}

impl Battery<'_> {
    fn def(name: &str) -> &'static CheckDef {
        CHECKS.iter().find(|s| s.name == name).expect("known check")
    }

    fn tol(&self, name: &str) -> f64 {
        let def = Self::def(name);
        self.cfg.tolerance(name, def.tolerance, self.scale)
    }

    /// Runs `f` unless the check is disabled or `skip` gives a reason.
    fn run(
        &mut self,
        name: &str,
        skip: Option<String>,
        f: impl FnOnce(f64) -> Result<(f64, String), PipelineError>,
    ) -> Result<(), PipelineError> {
        let def = Self::def(name);
        let tol = self.tol(name);
        let outcome = if !self.cfg.check_enabled(name) {
            CheckOutcome::skipped(name, def.anchor, tol, "disabled in configuration")
        } else if let Some(reason) = skip {
            CheckOutcome::skipped(name, def.anchor, tol, reason)
        } else {
            let (defect, detail) = f(tol)?;
            CheckOutcome::measured(name, def.anchor, defect, tol, detail)
        };
        self.out.push(outcome);
        Ok(())
    }

    fn algebraic(&self) -> Option<String> {
        (self.command == Command::Oracle).then(|| "covered by the verify and spectrum commands".to_string())
    }

    fn quadrature(&self, su2: bool) -> Option<String> {
        if self.command != Command::Oracle {
            Some("run the oracle command".into())
        } else if !su2 {
            Some("quadrature oracles exist for su(2) only".into())
        } else {
            None
        }
    }
}

fn blocks_for_scaled(cfg: &RunConfig, setup: &Setup, factor: f64) -> Result<Vec<DiracBlock>, PipelineError> {
    let geom = &setup.orbit.geom;
    let orbit = Orbit::from_z(&geom.algebra, &(&geom.datum.z * factor))?;
    let label = builtin_connection(cfg.connection.label).expect("scaling runs for built-in connections");
    let conn = full_connection(&label, &orbit.geom, &orbit.weights)?;
    let g0 = metric_for(&orbit, cfg.connection.metric);
    let ctx = DiracContext::new(&orbit.geom, &g0, &conn, &setup.character, setup.orientation)?;
    build_blocks(&ctx, &setup.irreps, setup.reduction)
}

pub fn run(cfg: &RunConfig, command: Command, tolerance_scale: f64) -> Result<RunOutput, PipelineError> {
    let setup = prepare(cfg)?;
    let geom = &setup.orbit.geom;
    let alg = &geom.algebra;
    let su2 = alg.is_su2_standard();
    let ctx = context(&setup)?;
    let mut warnings = setup.warnings.clone();
    let seed = cfg.oracle.seed;

    let irreps: Vec<IrrepData> = if command == Command::Oracle {
        setup.irreps.iter().filter(|ir| !su2 || ir.dim <= cfg.oracle.galerkin_max_two_j + 1).cloned().collect()
    } else {
        setup.irreps.clone()
    };
    let blocks = build_blocks(&ctx, &irreps, setup.reduction)?;
    let summary = summarize_blocks(&blocks);

    let mut bat = Battery { cfg, command, scale: tolerance_scale, out: Vec::new() };
    let skip = bat.algebraic();

    bat.run("kahler_structure", skip.clone(), |_| {
        Ok((kahler_suite(&setup.orbit, 20, seed), "20 random (Z, t) in the stabilizer".into()))
    })?;
    bat.run("levi_civita_routes", skip.clone(), |_| {
        let rep = levi_civita_routes(&setup.orbit)?;
        Ok((
            rep.max(),
            format!(
                "routes {:.3e}, torsion {:.3e}, metric {:.3e}, J {:.3e}",
                rep.route_agreement, rep.torsion, rep.metric_compat, rep.j_commutation
            ),
        ))
    })?;
    bat.run("bracket_decomposition", skip.clone(), |_| {
        Ok((bracket_battery(&setup.orbit, 50, seed), "50 random single-weight pairs".into()))
    })?;
    bat.run("clifford_fock", skip.clone(), |_| {
        let mut worst = clifford_suite(&ctx.fock, 10, seed).max();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        for n in 1..=3 {
            let model: ComplexModel = random_complex_model(n, &mut rng);
            worst = worst.max(clifford_suite(&FockSpace::new(model), 10, seed + n as u64).max());
        }
        Ok((worst, format!("orbit spinors (n = {}) and random models n = 1, 2, 3", ctx.fock.n())))
    })?;

    let trace = trace_criterion(geom, &setup.conn, &setup.g0)?.amax();
    let trace_tol = bat.tol("trace_criterion");
    let herm_tol = bat.tol("dirac_hermiticity");
    bat.run("trace_criterion", skip.clone(), |_| Ok((trace, format!("connection {}", setup.conn.label))))?;
    let nonempty = format!("{} of {} blocks nonempty", summary.nonempty, blocks.len());
    bat.run("dirac_hermiticity", skip.clone(), |_| Ok((summary.hermiticity, nonempty.clone())))?;
    let compat = metric_compat_defect(&setup.conn, &setup.g0);
    let iff_skip = skip.clone().or_else(|| {
        (compat > 1e-9).then(|| format!("the criterion covers metric-compatible connections (defect {compat:.3e})"))
    });
    bat.run("self_adjointness_iff", iff_skip, |_| {
        let trace_zero = trace <= trace_tol;
        let hermitian = summary.hermiticity <= herm_tol;
        let detail = format!("trace zero: {trace_zero}, blocks Hermitian: {hermitian}");
        Ok((if trace_zero == hermitian { 0.0 } else { 1.0 }, detail))
    })?;
    bat.run("chirality_anticommutation", skip.clone(), |_| {
        Ok((
            summary.chirality.max(summary.symmetry),
            format!("anticommutator {:.3e}, spectral symmetry {:.3e}", summary.chirality, summary.symmetry),
        ))
    })?;
    bat.run("modified_dirac", skip.clone(), |_| {
        let mut worst = 0.0_f64;
        for b in blocks.iter().filter(|b| b.dim() > 0) {
            let m = ctx.modified_block(b)?;
            let skew = cmax_abs(&((&b.m_hat - b.m_hat.adjoint()) * c(0.5)));
            let shift = cmax_abs(&(&m.d_matrix - &b.d_matrix));
            worst = worst.max(m.hermiticity_defect).max((shift - skew).abs());
        }
        Ok((worst, "Hermiticity of the modified blocks and size of the correction".into()))
    })?;

    let quad_skip = bat.quadrature(su2);
    bat.run("divergence_quadrature", quad_skip.clone(), |_| {
        let lc = koszul_connection(geom, &setup.g0)?;
        let grid = EulerGrid::cube(cfg.oracle.grid);
        let mut worst = 0.0_f64;
        for (_, field) in standard_test_fields(seed) {
            worst = worst.max(divergence_integral(geom, &lc, &setup.g0, &field, grid)?.abs());
        }
        Ok((worst, format!("5 test fields, grid {0}x{0}x{0}", cfg.oracle.grid)))
    })?;
    let galerkin_skip = quad_skip.or_else(|| {
        (setup.reduction == Reduction::Unreduced)
            .then(|| "connection is not K-equivariant; equivariant sections are not preserved".to_string())
    });
    bat.run("galerkin_oracle", galerkin_skip, |_| {
        let grid = GalerkinGrid {
            n_angle: cfg.oracle.galerkin_angles,
            n_theta: cfg.oracle.galerkin_angles,
            ..GalerkinGrid::default()
        };
        let mut worst = 0.0_f64;
        for (ir, b) in irreps.iter().zip(&blocks) {
            let gal = galerkin_eigenvalues(&ctx, ir, grid)?;
            if gal.rank != b.dim() {
                return Ok((f64::INFINITY, format!("{}: Galerkin rank {} vs block {}", ir.label, gal.rank, b.dim())));
            }
            for (x, y) in gal.eigenvalues.iter().zip(&b.eigenvalues) {
                worst = worst.max((x - y).norm());
            }
        }
        Ok((worst, format!("2j <= {}", cfg.oracle.galerkin_max_two_j)))
    })?;

    let scaling_skip = skip.clone().or_else(|| {
        if cfg.connection.metric == MetricChoice::Killing {
            Some("the Killing metric does not depend on Z".into())
        } else if cfg.connection.label == ConnectionKind::Custom {
            Some("custom connections are not defined for rescaled orbits".into())
        } else {
            None
        }
    });
    bat.run("metric_scaling", scaling_skip, |_| {
        let mut worst = 0.0_f64;
        for factor in SCALING_FACTORS {
            let scaled = blocks_for_scaled(cfg, &setup, factor)?;
            worst = worst.max(scaling_defect(&blocks, &scaled, factor.powf(-0.5)));
        }
        Ok((worst, "c in {2, 3, 5}".into()))
    })?;

    let spectrum_rows = (command == Command::Spectrum).then(|| spectrum(&blocks));
    if let Some(rows) = &spectrum_rows {
        if rows.is_empty() {
            warnings.push("every block is empty; the spectrum is empty".into());
            warn!("every block is empty; the spectrum is empty");
        }
    }
    let m_sub_dim = geom.r();
    let run = RunSummary {
        command: command.name().into(),
        algebra: alg.name().into(),
        mu: geom.datum.mu.iter().copied().collect(),
        z: geom.datum.z.iter().copied().collect(),
        connection: setup.conn.label.to_string(),
        metric: cfg.connection.metric.to_string(),
        orientation: setup.orientation,
        character_weight: setup.character.weight.iter().copied().collect(),
        irrep_cutoff: cfg.irreps.cutoff,
        irreps: irreps.iter().map(|i| i.label.clone()).collect(),
        reduction: match setup.reduction {
            Reduction::Invariant => "k-invariant".into(),
            Reduction::Unreduced => "unreduced".into(),
        },
        orbit_dim: m_sub_dim,
        spinor_dim: ctx.spinor_dim(),
    };
    let mut report = PropertyReport::new(run, bat.out, warnings);
    report.non_hermitian_spectrum = !summary.all_hermitian;
    report.spectrum_rows = spectrum_rows.as_ref().map_or(0, Vec::len);
    Ok(RunOutput { report, spectrum: spectrum_rows })
}

/// Writes the report and, for the spectrum command, the CSV into `dir`.
pub fn write_outputs(cfg: &RunConfig, dir: &Path, out: &RunOutput) -> Result<(), PipelineError> {
    let err = |e: &dyn std::fmt::Display| PipelineError::Output(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(|e| err(&e))?;
    fs::write(dir.join(&cfg.output.report), out.report.to_json()).map_err(|e| err(&e))?;
    if let Some(rows) = &out.spectrum {
        let f = fs::File::create(dir.join(&cfg.output.spectrum)).map_err(|e| err(&e))?;
        write_spectrum_csv(rows, std::io::BufWriter::new(f)).map_err(|e| err(&e))?;
    }
    Ok(())
}
