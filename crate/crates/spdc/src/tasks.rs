//! Task execution: from a resolved config to a table plus summary.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::{json, Value};

use spdc_core::constants::verify_constants;
use spdc_core::model::{
    delta_pm, effective_params, expansion_point, jsa_analytic, optimal_h, rayleigh_diagnostic,
    separability, separable_pump_sigma, spectrum_matrix, total_probability_at_offset,
    SpectralWidths, SpectrumForm,
};
use spdc_core::numeric::{expand_delta_order2, NumericOracle, StepControl};
use spdc_core::optimize::{
    find_global_wp, fit_optimum_lines, optimize_lw, stationarity, AnalyticObjective, Bounds,
    Geometry, GlobalSearch, LinearFit, NelderMead, NumericObjective, Objective, OptimizationResult,
    OptimumLines,
};
use spdc_core::phase_matching::{solve_alpha, tolerance};
use spdc_core::units::{omega_from_wavelength, rad_to_deg, width_from_sigma};
use spdc_core::{
    derive_constants, Crystal, CrystalCut, OpticalConstants, SellmeierSet, SetupParams,
};

use crate::config::{
    CutTarget, GlobalGeometry, Offset, OptimizeMode, RunConfig, Task, WaistGeometry,
};
use crate::crystal::{self, Source};
use crate::output::{string_map, Cell, Table};
use crate::parallel::Rayon;
use crate::Error;

fn numeric(what: impl FnOnce() -> String) -> impl FnOnce(spdc_core::Error) -> Error {
    move |source| Error::Numeric {
        context: what(),
        source,
    }
}

/// Everything derived from a config before the task runs.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub sellmeier: SellmeierSet,
    pub source: Source,
    pub crystal: Crystal,
    pub constants: OpticalConstants,
}

impl Context {
    pub fn new(config: &RunConfig) -> Result<Self, Error> {
        let (sellmeier, source) = crystal::load(&config.crystal_file, &config.base_dir)?;
        let alpha = match config.cut {
            CutTarget::Alpha(a) => a,
            CutTarget::Theta0(theta0) => solve_alpha(&sellmeier, config.lambda0, theta0)
                .map_err(numeric(|| "crystal-optics: phase matching".into()))?,
        };
        let cut =
            CrystalCut::with_axis_plane(alpha, config.axis_plane).map_err(|e| Error::Config {
                key: "cut".into(),
                message: e.to_string(),
            })?;
        let constants = derive_constants(&sellmeier, &cut, config.lambda0)
            .map_err(numeric(|| "crystal-optics: derived constants".into()))?;
        Ok(Self {
            config: config.clone(),
            crystal: Crystal::new(sellmeier.clone(), cut),
            sellmeier,
            source,
            constants,
        })
    }

    fn widths(&self) -> SpectralWidths {
        SpectralWidths {
            pump: self.config.pump_width,
            filter: self.config.filter_width,
            convention: self.config.convention,
        }
    }

    /// Setup from `setup.*` and `spectrum.*`, offset resolved.
    pub fn setup(&self) -> SetupParams {
        let c = &self.config;
        let mut s = SetupParams::new(c.length, c.fiber_waist, c.pump_waist, 0.0, 0.0);
        self.widths().apply(&mut s, c.lambda0);
        self.with_offset(s)
    }

    fn with_offset(&self, mut s: SetupParams) -> SetupParams {
        s.offset = match self.config.offset {
            Offset::Optimal => optimal_h(&s, &self.constants),
            Offset::Fixed(h) => h,
        };
        s
    }

    pub fn oracle(&self) -> Result<NumericOracle, Error> {
        let expansion =
            expand_delta_order2(&self.crystal, &self.constants, &StepControl::default())
                .map_err(numeric(|| "numeric-oracle: order-2 expansion".into()))?;
        Ok(
            NumericOracle::new(self.constants, expansion, self.config.quadrature)
                .with_options(self.config.numeric)
                .with_crystal(self.crystal.clone()),
        )
    }

    fn numeric_probability(
        &self,
        oracle: &NumericOracle,
        setup: &SetupParams,
    ) -> spdc_core::Result<(f64, f64)> {
        if self.config.verify {
            let e = oracle.probability_verified(setup, &Rayon)?;
            Ok((e.value, e.relative_change))
        } else {
            Ok((oracle.probability(setup, &Rayon)?, f64::NAN))
        }
    }

    /// Config block with `crystal.file` pinned to where it was found.
    pub fn resolved_config(&self) -> BTreeMap<String, String> {
        let mut map = self.config.resolved.clone();
        map.insert(
            "crystal.file".into(),
            self.source.config_value(&self.config.crystal_file),
        );
        map
    }

    pub fn constants_json(&self) -> Value {
        let k = &self.constants;
        json!({
            "lambda0_m": k.lambda0,
            "omega0_rad_per_s": k.omega0,
            "alpha_rad": k.alpha,
            "alpha_deg": rad_to_deg(k.alpha),
            "axis_plane_rad": k.axis_plane_angle,
            "theta0_rad": k.theta0,
            "theta0_deg": rad_to_deg(k.theta0),
            "theta0_int_rad": k.theta0_int,
            "gamma_rad": k.gamma,
            "gamma_deg": rad_to_deg(k.gamma),
            "dbeta_minus_z_s_per_m": k.dbeta_minus_z,
            "dbeta_plus_z_s_per_m": k.dbeta_plus_z,
            "n_o_degenerate": k.n_o_deg,
        })
    }

    fn crystal_json(&self) -> Value {
        let source = match &self.source {
            Source::File(p) => p.display().to_string(),
            Source::ConstantsDir(p) => format!("{} (constants dir)", p.display()),
            Source::Builtin(n) => format!("builtin:{n}"),
        };
        json!({ "name": self.sellmeier.name, "source": source, "coefficients": crystal::describe(&self.sellmeier) })
    }
}

/// A finished task before anything is written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub context: Context,
    pub table: Table,
    /// Declared reference row for `*_rel` columns, if any.
    pub normalization: Value,
    /// Task-specific results (fits, diagnostics).
    pub details: Value,
}

impl Outcome {
    pub fn summary(&self, csv_name: &str) -> Value {
        json!({
            "config": string_map(&self.context.resolved_config()),
            "constants": self.context.constants_json(),
            "crystal": self.context.crystal_json(),
            "normalization": self.normalization,
            "details": self.details,
            "csv": { "file": csv_name, "columns": self.table.columns, "records": self.table.rows.len() },
            "tool": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        })
    }
}

pub fn execute(config: &RunConfig) -> Result<Outcome, Error> {
    let context = Context::new(config)?;
    let (mut table, details) = match config.task {
        Task::Constants => constants_task(&context)?,
        Task::JsaGrid => jsa_grid(&context)?,
        Task::ScanLength => scan_length(&context)?,
        Task::ScanWaist => scan_waist(&context)?,
        Task::Separability => separability_scan(&context)?,
        Task::Optimize => optimize_task(&context)?,
    };
    let normalization = normalize(&mut table);
    if let Some((row, column)) = table.first_non_finite() {
        return Err(Error::Numeric {
            context: format!("{}: row {row}", config.task.name()),
            source: spdc_core::Error::Objective(format!("non-finite value in column `{column}`")),
        });
    }
    Ok(Outcome {
        context,
        table,
        normalization,
        details,
    })
}

/// Columns that get a `*_rel` companion, in order of preference for the
/// reference.
const PROBABILITY_COLUMNS: [&str; 5] = [
    "p_analytic",
    "p_numeric",
    "jsa_analytic",
    "jsa_numeric",
    "p_max",
];

/// Divides every probability column by the largest value of the first one
/// present and appends the results as `*_rel` columns.
fn normalize(table: &mut Table) -> Value {
    let present: Vec<&str> = PROBABILITY_COLUMNS
        .iter()
        .copied()
        .filter(|c| table.column(c).is_some())
        .collect();
    let Some(&reference) = present.first() else {
        return Value::Null;
    };
    let values = table.values(reference);
    let Some((row, value)) = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })
    else {
        return Value::Null;
    };
    let columns: Vec<Vec<Option<f64>>> = present.iter().map(|c| table.values(c)).collect();
    for name in &present {
        table.columns.push(format!("{name}_rel"));
    }
    for (i, r) in table.rows.iter_mut().enumerate() {
        for col in &columns {
            r.push(col[i].map_or(Cell::Empty, |x| Cell::Si(x / value)));
        }
    }
    json!({
        "rule": format!("every *_rel column is divided by the largest {reference}"),
        "column": reference,
        "row": row,
        "value": value,
    })
}

fn constants_task(ctx: &Context) -> Result<(Table, Value), Error> {
    let k = &ctx.constants;
    let mut t = Table::new([
        "quantity",
        "value_si",
        "unit_si",
        "value_display",
        "unit_display",
    ]);
    let rows: [(&str, f64, &str, f64, &str); 10] = [
        ("lambda0", k.lambda0, "m", k.lambda0 * 1e9, "nm"),
        ("omega0", k.omega0, "rad/s", k.omega0 * 1e-15, "rad/fs"),
        ("alpha", k.alpha, "rad", rad_to_deg(k.alpha), "deg"),
        (
            "axis_plane",
            k.axis_plane_angle,
            "rad",
            rad_to_deg(k.axis_plane_angle),
            "deg",
        ),
        ("theta0", k.theta0, "rad", rad_to_deg(k.theta0), "deg"),
        (
            "theta0_int",
            k.theta0_int,
            "rad",
            rad_to_deg(k.theta0_int),
            "deg",
        ),
        ("gamma", k.gamma, "rad", rad_to_deg(k.gamma), "deg"),
        (
            "dbeta_minus_z",
            k.dbeta_minus_z,
            "s/m",
            k.dbeta_minus_z * 1e12,
            "fs/mm",
        ),
        (
            "dbeta_plus_z",
            k.dbeta_plus_z,
            "s/m",
            k.dbeta_plus_z * 1e12,
            "fs/mm",
        ),
        ("n_o_degenerate", k.n_o_deg, "1", k.n_o_deg, "1"),
    ];
    for (name, si, unit, display, display_unit) in rows {
        t.push(vec![
            Cell::Text(name.into()),
            Cell::Si(si),
            Cell::Text(unit.into()),
            Cell::Display(display),
            Cell::Text(display_unit.into()),
        ]);
    }
    let (s0, i0) = expansion_point(k);
    let (dm, _) =
        delta_pm(&ctx.crystal, &s0, &i0).map_err(numeric(|| "crystal-optics: mismatch".into()))?;
    let checks = verify_constants(&ctx.crystal, k)
        .map_err(numeric(|| "crystal-optics: derivative check".into()))?;
    let checks: BTreeMap<String, Value> = checks
        .iter()
        .map(|c| {
            (c.name.clone(), json!({ "analytic": c.analytic, "finite_difference": c.finite_difference, "observed_order": c.richardson.observed_order }))
        })
        .collect();
    Ok((
        t,
        json!({ "mismatch_at_expansion_point": dm, "mismatch_tolerance": tolerance(k.lambda0), "derivative_checks": checks }),
    ))
}

fn jsa_grid(ctx: &Context) -> Result<(Table, Value), Error> {
    let c = &ctx.config;
    let setup = ctx.setup();
    let n = c.jsa_points;
    let lambdas: Vec<f64> = (0..n)
        .map(|k| c.lambda0 - c.jsa_span + 2.0 * c.jsa_span * k as f64 / (n - 1) as f64)
        .collect();
    let oracle = if c.oracle.numeric() {
        Some(ctx.oracle()?)
    } else {
        None
    };
    let mut columns = vec!["lambda_s_m", "lambda_i_m", "lambda_s_nm", "lambda_i_nm"];
    if c.oracle.analytic() {
        columns.push("jsa_analytic");
    }
    if oracle.is_some() {
        columns.push("jsa_numeric");
    }
    let mut t = Table::new(columns);
    let points: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&ls| lambdas.iter().map(move |&li| (ls, li)))
        .collect();
    let rows: Result<Vec<Vec<Cell>>, Error> = points
        .par_iter()
        .map(|&(ls, li)| {
            let (ws, wi) = (omega_from_wavelength(ls), omega_from_wavelength(li));
            let at = || format!("jsa-grid at ({:.3} nm, {:.3} nm)", ls * 1e9, li * 1e9);
            let mut row = vec![
                Cell::Si(ls),
                Cell::Si(li),
                Cell::Display(ls * 1e9),
                Cell::Display(li * 1e9),
            ];
            if c.oracle.analytic() {
                let a = jsa_analytic(ws, wi, &setup, &ctx.constants, SpectrumForm::Full)
                    .map_err(numeric(at))?;
                row.push(Cell::Si(a));
            }
            if let Some(o) = &oracle {
                let v = if c.verify {
                    o.jsa_verified(ws, wi, &setup)
                } else {
                    o.jsa(ws, wi, &setup)
                };
                row.push(Cell::Si(v.map_err(numeric(at))?));
            }
            Ok(row)
        })
        .collect();
    for r in rows? {
        t.push(r);
    }
    let omega = spectrum_matrix(&setup, &ctx.constants, SpectrumForm::Full)
        .map_err(numeric(|| "pdc-model: spectrum matrix".into()))?;
    Ok((
        t,
        json!({ "setup": setup_json(&setup), "spectrum_matrix_s2": { "ss": omega.ss, "ii": omega.ii, "si": omega.si } }),
    ))
}

fn setup_json(s: &SetupParams) -> Value {
    json!({
        "length_m": s.length,
        "fiber_waist_m": s.fiber_waist,
        "pump_waist_m": s.pump_waist,
        "offset_m": s.offset,
        "pump_sigma_rad_per_s": s.pump_sigma,
        "filter_sigma_rad_per_s": s.filter_sigma,
    })
}

/// Probability columns for a list of setups, analytic and/or numeric.
fn probabilities(
    ctx: &Context,
    setups: &[SetupParams],
    label: &str,
) -> Result<(Vec<&'static str>, Vec<Vec<Cell>>), Error> {
    let c = &ctx.config;
    let oracle = if c.oracle.numeric() {
        Some(ctx.oracle()?)
    } else {
        None
    };
    let mut columns = Vec::new();
    if c.oracle.analytic() {
        columns.push("p_analytic");
    }
    if oracle.is_some() {
        columns.extend(["p_numeric", "p_numeric_refinement"]);
    }
    let cells: Result<Vec<Vec<Cell>>, Error> = setups
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let at = || format!("{label}: point {i}");
            let mut row = Vec::new();
            if c.oracle.analytic() {
                let p = total_probability_at_offset(s, &ctx.constants, SpectrumForm::Full)
                    .map_err(numeric(at))?;
                row.push(Cell::Si(p));
            }
            if let Some(o) = &oracle {
                let (p, change) = ctx.numeric_probability(o, s).map_err(numeric(at))?;
                row.push(Cell::Si(p));
                row.push(if change.is_nan() {
                    Cell::Empty
                } else {
                    Cell::Si(change)
                });
            }
            Ok(row)
        })
        .collect();
    Ok((columns, cells?))
}

fn scan_length(ctx: &Context) -> Result<(Table, Value), Error> {
    let grid = ctx.config.scan.expect("scan tasks carry a grid").grid();
    let base = ctx.setup();
    let setups: Vec<SetupParams> = grid
        .iter()
        .map(|&l| ctx.with_offset(SetupParams { length: l, ..base }))
        .collect();
    let (p_columns, p_cells) = probabilities(ctx, &setups, "scan-length")?;
    let mut columns = vec![
        "length_m",
        "length_mm",
        "offset_m",
        "offset_um",
        "gamma_eff",
        "theta_eff",
        "effective_length_m",
        "long_rayleigh",
    ];
    columns.extend(p_columns);
    let mut t = Table::new(columns);
    for (s, p) in setups.iter().zip(p_cells) {
        let e = effective_params(s, &ctx.constants);
        let r = rayleigh_diagnostic(s, &ctx.crystal, &ctx.constants)
            .map_err(numeric(|| "pdc-model: Rayleigh ranges".into()))?;
        let mut row = vec![
            Cell::Si(s.length),
            Cell::Display(s.length * 1e3),
            Cell::Si(s.offset),
            Cell::Display(s.offset * 1e6),
            Cell::Si(e.gamma),
            Cell::Si(e.theta),
            Cell::Si(e.length),
            Cell::Flag(r.is_valid()),
        ];
        row.extend(p);
        t.push(row);
    }
    Ok((t, json!({ "setup": setup_json(&base) })))
}

fn scan_waist(ctx: &Context) -> Result<(Table, Value), Error> {
    let c = &ctx.config;
    let grid = c.scan.expect("scan tasks carry a grid").grid();
    let base = ctx.setup();
    let bounds = Bounds::default();
    let geometry: Result<Vec<(SetupParams, Option<OptimizationResult>)>, Error> = grid
        .par_iter()
        .map(|&wp| match c.waist_geometry {
            WaistGeometry::Fixed => Ok((
                ctx.with_offset(SetupParams {
                    pump_waist: wp,
                    ..base
                }),
                None,
            )),
            WaistGeometry::Optimized => {
                let objective = AnalyticObjective::new(ctx.constants, base);
                let r = optimize_lw(wp, &objective, &bounds, &NelderMead::default())
                    .map_err(numeric(|| format!("optimizer: (L, w) at w_P = {wp:e} m")))?;
                let s = SetupParams {
                    length: r.length,
                    fiber_waist: r.fiber_waist,
                    pump_waist: wp,
                    ..base
                };
                Ok((ctx.with_offset(s), Some(r)))
            }
        })
        .collect();
    let geometry = geometry?;
    let setups: Vec<SetupParams> = geometry.iter().map(|g| g.0).collect();
    let (p_columns, p_cells) = probabilities(ctx, &setups, "scan-waist")?;
    let mut columns = vec![
        "pump_waist_m",
        "pump_waist_um",
        "length_m",
        "length_mm",
        "fiber_waist_m",
        "fiber_waist_um",
        "offset_m",
        "offset_um",
        "geometry_converged",
    ];
    columns.extend(p_columns);
    let mut t = Table::new(columns);
    for ((s, r), p) in geometry.iter().zip(p_cells) {
        let mut row = vec![
            Cell::Si(s.pump_waist),
            Cell::Display(s.pump_waist * 1e6),
            Cell::Si(s.length),
            Cell::Display(s.length * 1e3),
            Cell::Si(s.fiber_waist),
            Cell::Display(s.fiber_waist * 1e6),
            Cell::Si(s.offset),
            Cell::Display(s.offset * 1e6),
            r.map_or(Cell::Empty, |r| Cell::Flag(r.converged)),
        ];
        row.extend(p);
        t.push(row);
    }
    let geometry = match c.waist_geometry {
        WaistGeometry::Fixed => "fixed",
        WaistGeometry::Optimized => "closed-form optimum (L, w) at each w_P",
    };
    Ok((
        t,
        json!({ "geometry": geometry, "bounds": bounds_json(&bounds) }),
    ))
}

fn separability_scan(ctx: &Context) -> Result<(Table, Value), Error> {
    let c = &ctx.config;
    let grid = c.scan.expect("scan tasks carry a grid").grid();
    let base = ctx.setup();
    let mut t = Table::new([
        "waist_m",
        "waist_um",
        "ratio",
        "residual_s2",
        "omega_ss_s2",
        "omega_ii_s2",
        "omega_si_s2",
        "separable_pump_sigma_rad_per_s",
        "separable_pump_width_nm",
    ]);
    for &w in &grid {
        let s = ctx.with_offset(SetupParams {
            fiber_waist: w,
            pump_waist: w,
            ..base
        });
        let at = || format!("separability at w = w_P = {w:e} m");
        let sep = separability(&s, &ctx.constants).map_err(numeric(at))?;
        let omega =
            spectrum_matrix(&s, &ctx.constants, SpectrumForm::SmallAngle).map_err(numeric(at))?;
        let sigma = separable_pump_sigma(&s, &ctx.constants);
        t.push(vec![
            Cell::Si(w),
            Cell::Display(w * 1e6),
            Cell::Si(sep.ratio),
            Cell::Si(sep.residual),
            Cell::Si(omega.ss),
            Cell::Si(omega.ii),
            Cell::Si(omega.si),
            sigma.map_or(Cell::Empty, Cell::Si),
            sigma.map_or(Cell::Empty, |x| {
                Cell::Display(width_from_sigma(x, c.lambda0 / 2.0, c.convention) * 1e9)
            }),
        ]);
    }
    Ok((
        t,
        json!({ "form": "small-angle", "width_convention": c.convention.name() }),
    ))
}

fn bounds_json(b: &Bounds) -> Value {
    json!({ "length_m": [b.length.0, b.length.1], "fiber_waist_m": [b.fiber_waist.0, b.fiber_waist.1], "pump_waist_m": [b.pump_waist.0, b.pump_waist.1] })
}

fn fit_json(f: &LinearFit) -> Value {
    json!({ "intercept_m": f.intercept, "slope": f.slope, "residual_rms_m": f.residual_rms, "points": f.points })
}

fn lines_json(lines: &OptimumLines) -> Value {
    json!({
        "fiber_waist": fit_json(&lines.fiber_waist),
        "length": fit_json(&lines.length),
        "excluded_pump_waists_m": lines.excluded.iter().map(|r| r.pump_waist).collect::<Vec<_>>(),
    })
}

const RESULT_COLUMNS: [&str; 14] = [
    "objective",
    "pump_waist_m",
    "pump_waist_um",
    "length_m",
    "length_mm",
    "fiber_waist_m",
    "fiber_waist_um",
    "offset_m",
    "offset_um",
    "p_max",
    "evaluations",
    "converged",
    "on_boundary",
    "excluded",
];

fn result_row(objective: &str, r: &OptimizationResult, excluded: bool) -> Vec<Cell> {
    vec![
        Cell::Text(objective.into()),
        Cell::Si(r.pump_waist),
        Cell::Display(r.pump_waist * 1e6),
        Cell::Si(r.length),
        Cell::Display(r.length * 1e3),
        Cell::Si(r.fiber_waist),
        Cell::Display(r.fiber_waist * 1e6),
        Cell::Si(r.offset),
        Cell::Display(r.offset * 1e6),
        Cell::Si(r.p_max),
        Cell::Int(r.evaluations),
        Cell::Flag(r.converged),
        Cell::Flag(r.on_boundary),
        Cell::Flag(excluded),
    ]
}

fn optimize_task(ctx: &Context) -> Result<(Table, Value), Error> {
    let c = &ctx.config;
    let bounds = Bounds::default();
    let settings = NelderMead::default();
    let template = ctx.setup();
    let analytic = AnalyticObjective::new(ctx.constants, template);
    let numeric_objective = if c.oracle.numeric() {
        Some(NumericObjective {
            oracle: ctx.oracle()?,
            template,
            map: Rayon,
        })
    } else {
        None
    };
    let mut objectives: Vec<(&str, &dyn Objective)> = Vec::new();
    if c.oracle.analytic() {
        objectives.push(("analytic", &analytic));
    }
    if let Some(o) = &numeric_objective {
        objectives.push(("numeric", o));
    }
    let fit_grid = c.optimize.fit.grid();
    let mut t = Table::new(RESULT_COLUMNS);
    let mut details = serde_json::Map::new();
    details.insert("bounds".into(), bounds_json(&bounds));
    for (name, objective) in objectives {
        let fail =
            |what: &'static str| numeric(move || format!("optimizer ({name} objective): {what}"));
        match c.optimize.mode {
            OptimizeMode::Lw => {
                let r = optimize_lw(c.pump_waist, objective, &bounds, &settings)
                    .map_err(fail("(L, w)"))?;
                let g = stationarity(&r, objective, 1e-3).map_err(fail("stationarity"))?;
                t.push(result_row(name, &r, false));
                details.insert(
                    name.into(),
                    json!({ "gradient_ln_p": { "ln_L": g[0], "ln_w": g[1] } }),
                );
            }
            OptimizeMode::Lines => {
                let lines = fit_optimum_lines(&fit_grid, objective, &bounds, &settings)
                    .map_err(fail("optimum lines"))?;
                let mut all: Vec<(OptimizationResult, bool)> = lines
                    .optima
                    .iter()
                    .map(|r| (*r, false))
                    .chain(lines.excluded.iter().map(|r| (*r, true)))
                    .collect();
                all.sort_by(|a, b| a.0.pump_waist.total_cmp(&b.0.pump_waist));
                for (r, excluded) in all {
                    t.push(result_row(name, &r, excluded));
                }
                details.insert(name.into(), json!({ "lines": lines_json(&lines) }));
            }
            OptimizeMode::Global => {
                let mut search = GlobalSearch::default();
                let mut info = serde_json::Map::new();
                if c.optimize.geometry == GlobalGeometry::Lines {
                    // the optimum lines always come from the closed form
                    let lines = fit_optimum_lines(&fit_grid, &analytic, &bounds, &settings)
                        .map_err(fail("optimum lines"))?;
                    search.geometry = Geometry::from_lines(&lines);
                    info.insert("lines".into(), lines_json(&lines));
                }
                let r = find_global_wp(objective, &bounds, &search)
                    .map_err(fail("global pump waist"))?;
                t.push(result_row(name, &r, false));
                info.insert(
                    "geometry".into(),
                    Value::from(match c.optimize.geometry {
                        GlobalGeometry::Lines => "closed-form optimum lines",
                        GlobalGeometry::Optimized => "(L, w) re-optimized at every w_P",
                    }),
                );
                details.insert(name.into(), Value::Object(info));
            }
        }
    }
    Ok((t, Value::Object(details)))
}
