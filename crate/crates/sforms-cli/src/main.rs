//! `sforms` — command-line front end for the exact S-integral quadratic
//! forms toolkit.
//!
//! Every command computes a single JSON envelope (`"schema": 1`) with stable
//! key order; the table format is rendered from that JSON value, never
//! computed separately. Exit codes: 0 decided/computed, 2 inconclusive
//! (budget exhausted without a decision), 1 usage or input error.

use std::fs;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sforms_core::arith::{abs_nu, parse_rat, rat_i64, rat_to_string, Place, PlaceSet, Rat};
use sforms_core::bounds::{self, ConstantsLedger, EquivCase, PowVal};
use sforms_core::construct;
use sforms_core::local;
use sforms_core::matrix::RMatrix;
use sforms_core::qform::QuadraticForm;
use sforms_core::reduce::{self, EquivOutcome, Ring, ZsBudget};
use sforms_core::selftest;
use sforms_core::slattice::{self, SLattice};

// ===========================================================================
// argument surface
// ===========================================================================

#[derive(Parser)]
#[command(
    name = "sforms",
    version,
    about = "Exact local invariants, standardization, reduction, equivalence certificates, \
             explicit bounds and S-lattice computations for integral quadratic forms"
)]
struct Cli {
    /// Output format (table is rendered from the JSON envelope)
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Local invariants and standard forms of a quadratic form at given places
    Classify(ClassifyArgs),
    /// Standardization witness P∘g = Q with certified norm bound
    Standardize(StandardizeArgs),
    /// Decide Z- or Z_S-equivalence with an exact certificate
    Equiv(EquivArgs),
    /// Minkowski-reduce a positive definite integral form
    Reduce(ReduceArgs),
    /// Enumerate reduced positive definite forms of a given determinant
    #[command(name = "enumerate-reduced")]
    EnumerateReduced(EnumerateArgs),
    /// The full automorphism group O(Q, Z) of a definite form
    Autgroup(AutgroupArgs),
    /// Assemble a generating set from fundamental-set and generating data
    Generators(GeneratorsArgs),
    /// Explicit equivalence / generator search bounds per place
    Bounds(BoundsArgs),
    /// Volume and counting calculators
    #[command(subcommand)]
    Volumes(VolumesCmd),
    /// S-lattice computations on a basis matrix
    #[command(subcommand)]
    Lattice(LatticeCmd),
    /// Verify the polynomial goodness inequality by exact residue counting
    #[command(name = "good-check")]
    GoodCheck(GoodCheckArgs),
    /// Run the acceptance self-checks
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct ClassifyArgs {
    /// Form as a JSON file or inline JSON ({"d":3,"coeffs":[[1,1,"1"],…]})
    #[arg(long)]
    form: String,
    /// Comma-separated places, e.g. inf,2,17
    #[arg(long, default_value = "inf")]
    places: String,
}

#[derive(Args)]
struct StandardizeArgs {
    #[arg(long)]
    form: String,
    /// The place ν (inf or a prime)
    #[arg(long)]
    place: String,
    /// Residue-search candidate budget
    #[arg(long, default_value_t = 200_000)]
    budget: u64,
}

#[derive(Args)]
struct EquivArgs {
    #[arg(long)]
    q1: String,
    #[arg(long)]
    q2: String,
    /// Coefficient ring: z (integers) or zs (S-integers; set --places)
    #[arg(long, default_value = "z")]
    ring: String,
    /// Finite places of S for --ring zs, e.g. 2,7
    #[arg(long, default_value = "inf")]
    places: String,
    /// Search box: candidate matrices with ‖γ‖_∞ ≤ budget
    #[arg(long, default_value = "20")]
    budget: String,
    /// Denominator exponent cap for the S-integral search
    #[arg(long, default_value_t = 2)]
    kmax: u32,
    /// Worker threads for the integral search (default: SFORMS_THREADS or 1)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ReduceArgs {
    #[arg(long)]
    form: String,
}

#[derive(Args)]
struct EnumerateArgs {
    /// Dimension
    #[arg(long)]
    d: usize,
    /// Determinant value
    #[arg(long)]
    det: u64,
}

#[derive(Args)]
struct AutgroupArgs {
    #[arg(long)]
    form: String,
}

#[derive(Args)]
struct GeneratorsArgs {
    /// JSON array of fundamental-set matrices U
    #[arg(long)]
    u: String,
    /// JSON array of generating matrices M
    #[arg(long)]
    m: String,
    /// Membership ring places: products u₁⁻¹·m·u₂ kept when in GL(d, Z_S)
    #[arg(long, default_value = "inf")]
    places: String,
    /// Optional form Q; when given, kept products must also preserve Q
    #[arg(long)]
    form: Option<String>,
}

#[derive(Args)]
struct BoundsArgs {
    /// Which bound: equiv (needs --q2) or generators
    #[arg(long, default_value = "equiv")]
    kind: String,
    #[arg(long)]
    q1: String,
    #[arg(long)]
    q2: Option<String>,
    #[arg(long, default_value = "inf")]
    places: String,
    /// Case: riso (R-isotropic) or raniso (R-anisotropic; set --p0)
    #[arg(long, default_value = "riso")]
    case: String,
    /// Isotropy prime p₀ ∈ S for the R-anisotropic case
    #[arg(long)]
    p0: Option<u64>,
    /// Value of the parameter D₁ (rational, e.g. 4 or 7/2)
    #[arg(long)]
    d1: Option<String>,
    /// Value of the parameter V_inf
    #[arg(long)]
    vinf: Option<String>,
}

#[derive(Subcommand)]
enum VolumesCmd {
    /// vol(GL(d, Z_p)) as an exact rational
    #[command(name = "vol-gl-zp")]
    VolGlZp {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        p: u64,
    },
    /// The spectral decay factor Ξ_p(m)
    Xi {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        m: u32,
    },
    /// Volume of the space of covolume-1 lattices (factored form)
    #[command(name = "vol-x1")]
    VolX1 {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value = "inf")]
        places: String,
        #[arg(long)]
        vinf: Option<String>,
    },
    /// p-adic ball volume in the Weyl-chamber coordinates
    #[command(name = "vol-w-ball")]
    VolWBall {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        n: u32,
    },
    /// Upper bound for the volume of the closed orbit of a form
    Orbit {
        #[arg(long)]
        form: String,
        #[arg(long, default_value = "inf")]
        places: String,
        #[arg(long)]
        d1: Option<String>,
        #[arg(long)]
        vinf: Option<String>,
    },
    /// The basis-norm bound as a function of the shortest-vector value
    #[command(name = "mahler-bound")]
    MahlerBound {
        #[arg(long)]
        d: usize,
        /// Shortest-vector value α₁ (rational)
        #[arg(long)]
        alpha1: String,
    },
    /// Recurrence constants (C, θ) of the orbit dynamics at a place
    Recurrence {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        place: String,
    },
}

#[derive(Subcommand)]
enum LatticeCmd {
    /// Covolume of g·Z_S^d
    Covolume(LatticeArgs),
    /// Shortest nonzero height with certification radius
    Systole {
        #[command(flatten)]
        lat: LatticeArgs,
        #[arg(long, default_value_t = 10)]
        radius: i64,
    },
    /// A reduced basis: finite places unimodular, ∞-norm within the bound
    Mahler(LatticeArgs),
    /// Primitive rank-k submodules of covolume < 1
    Submodules {
        #[command(flatten)]
        lat: LatticeArgs,
        #[arg(long)]
        rank: usize,
    },
}

#[derive(Args)]
struct LatticeArgs {
    /// Basis matrix as JSON rows of rational strings ([["1","0"],["1/2","1"]])
    #[arg(long)]
    basis: String,
    #[arg(long, default_value = "inf")]
    places: String,
}

#[derive(Args)]
struct GoodCheckArgs {
    /// Polynomial coefficients, constant term first, e.g. "-1,0,1" for t²−1
    #[arg(long, allow_hyphen_values = true)]
    coeffs: String,
    #[arg(long)]
    p: u64,
    /// Depth K: balls and levels up to p^{-K}
    #[arg(long, default_value_t = 6)]
    depth: u32,
}

#[derive(Args)]
struct SelftestArgs {
    /// Run a single criterion (1–12) instead of all
    #[arg(long)]
    criterion: Option<usize>,
}

// ===========================================================================
// outcome plumbing
// ===========================================================================

enum Verdict {
    Decided,
    Inconclusive,
}

struct Reply {
    result: Value,
    exactness: String,
    verdict: Verdict,
}

impl Reply {
    fn exact(result: Value) -> Reply {
        Reply {
            result,
            exactness: "exact".into(),
            verdict: Verdict::Decided,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = command_name(&cli.command);
    match dispatch(&cli.command) {
        Ok(reply) => {
            let envelope = json!({
                "schema": 1,
                "version": env!("CARGO_PKG_VERSION"),
                "command": name,
                "exactness": reply.exactness,
                "result": reply.result,
            });
            match cli.format {
                Format::Json => println!(
                    "{}",
                    serde_json::to_string_pretty(&envelope).expect("serializable envelope")
                ),
                Format::Table => print!("{}", render_table(&envelope)),
            }
            match reply.verdict {
                Verdict::Decided => {
                    if name == "selftest" && !all_passed(&envelope) {
                        ExitCode::FAILURE
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Verdict::Inconclusive => ExitCode::from(2),
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn all_passed(envelope: &Value) -> bool {
    envelope["result"]["passed"].as_bool().unwrap_or(false)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Classify(_) => "classify",
        Command::Standardize(_) => "standardize",
        Command::Equiv(_) => "equiv",
        Command::Reduce(_) => "reduce",
        Command::EnumerateReduced(_) => "enumerate-reduced",
        Command::Autgroup(_) => "autgroup",
        Command::Generators(_) => "generators",
        Command::Bounds(_) => "bounds",
        Command::Volumes(_) => "volumes",
        Command::Lattice(_) => "lattice",
        Command::GoodCheck(_) => "good-check",
        Command::Selftest(_) => "selftest",
    }
}

fn dispatch(c: &Command) -> Result<Reply> {
    match c {
        Command::Classify(a) => cmd_classify(a),
        Command::Standardize(a) => cmd_standardize(a),
        Command::Equiv(a) => cmd_equiv(a),
        Command::Reduce(a) => cmd_reduce(a),
        Command::EnumerateReduced(a) => cmd_enumerate(a),
        Command::Autgroup(a) => cmd_autgroup(a),
        Command::Generators(a) => cmd_generators(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Volumes(a) => cmd_volumes(a),
        Command::Lattice(a) => cmd_lattice(a),
        Command::GoodCheck(a) => cmd_good_check(a),
        Command::Selftest(a) => cmd_selftest(a),
    }
}

// ===========================================================================
// input helpers
// ===========================================================================

/// Read an argument as a file path, or as inline JSON when it starts with a
/// JSON bracket.
fn read_payload(arg: &str) -> Result<String> {
    let t = arg.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        return Ok(arg.to_string());
    }
    fs::read_to_string(arg).with_context(|| format!("cannot read input file {arg:?}"))
}

fn load_form(arg: &str) -> Result<QuadraticForm> {
    let payload = read_payload(arg)?;
    serde_json::from_str(&payload).with_context(|| format!("malformed form input {arg:?}"))
}

fn load_matrix(arg: &str) -> Result<RMatrix> {
    let payload = read_payload(arg)?;
    serde_json::from_str(&payload).with_context(|| format!("malformed matrix input {arg:?}"))
}

fn load_matrices(arg: &str) -> Result<Vec<RMatrix>> {
    let payload = read_payload(arg)?;
    serde_json::from_str(&payload).with_context(|| format!("malformed matrix list {arg:?}"))
}

fn parse_place(s: &str) -> Result<Place> {
    Place::from_str(s).map_err(|e| anyhow!("{e}"))
}

fn parse_places(s: &str) -> Result<PlaceSet> {
    PlaceSet::from_str(s).map_err(|e| anyhow!("{e}"))
}

/// Parse a rational parameter given as "7/2", "4", or a float like "3.5".
fn parse_param(s: &str) -> Result<Rat> {
    if let Ok(q) = parse_rat(s) {
        return Ok(q);
    }
    let f: f64 = s.parse().with_context(|| format!("cannot parse {s:?}"))?;
    Rat::from_float(f).ok_or_else(|| anyhow!("non-finite parameter {s:?}"))
}

fn parse_rat_list(s: &str) -> Result<Vec<Rat>> {
    s.split(',')
        .map(|t| parse_rat(t.trim()).map_err(|e| anyhow!("{e}")))
        .collect()
}

fn resolve_threads(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("SFORMS_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(1)
    .max(1)
}

// ===========================================================================
// value builders
// ===========================================================================

fn form_value(q: &QuadraticForm) -> Value {
    serde_json::to_value(q).expect("serializable form")
}

fn matrix_value(m: &RMatrix) -> Value {
    serde_json::to_value(m).expect("serializable matrix")
}

fn rat_value(q: &Rat) -> Value {
    Value::String(rat_to_string(q))
}

fn powval_value(v: &PowVal, d1: f64, vinf: f64) -> Value {
    json!({
        "factored": v.to_string(),
        "log10": v.log10(d1, vinf),
        "parametric": v.parametric_bases(),
    })
}

/// The envelope exactness tag for a set of parametric base names.
fn parametric_tag(bases: &[&str]) -> String {
    if bases.is_empty() {
        return "exact".into();
    }
    let ascii: Vec<&str> = bases
        .iter()
        .map(|b| if *b == "V∞" { "V_inf" } else { *b })
        .collect();
    format!("parametric({})", ascii.join(","))
}

// ===========================================================================
// commands
// ===========================================================================

fn cmd_classify(a: &ClassifyArgs) -> Result<Reply> {
    let q = load_form(&a.form)?;
    let places = parse_places(&a.places)?;
    let mut rows = Vec::new();
    for nu in places.places() {
        let inv = local::local_invariants(&q, nu)?;
        let sf = local::standard_form_of(&q, nu)?;
        rows.push(json!({
            "place": nu.to_string(),
            "det_class": rat_to_string(&inv.det_class.representative),
            "hasse": inv.hasse,
            "signature": inv.signature.map(|s| json!({
                "positive": s.positive,
                "negative": s.negative,
            })),
            "standard_form": form_value(&sf.form),
            "hyperbolic_planes": sf.hyperbolic_planes,
            "kernel_dim": sf.kernel_dim,
            "isotropic": sf.is_isotropic(),
        }));
    }
    Ok(Reply::exact(json!({
        "form": form_value(&q),
        "polynomial": q.to_polynomial_string(),
        "dim": q.dim(),
        "det": rat_value(&q.det()),
        "places": rows,
    })))
}

fn cmd_standardize(a: &StandardizeArgs) -> Result<Reply> {
    let q = load_form(&a.form)?;
    let nu = parse_place(&a.place)?;
    let w = construct::standardize_with_budget(&q, nu, a.budget)?;
    let verified = w.verify(&q)?;
    let exactness = match &w.approx_residual {
        None => "exact".to_string(),
        Some(_) => "approximate-∞".to_string(),
    };
    let result = json!({
        "place": nu.to_string(),
        "standard_form": form_value(&w.standard.form),
        "g": matrix_value(&w.g),
        "norm": rat_value(&w.g.nu_norm(nu)),
        "norm_bound": rat_value(&w.norm_bound),
        "norm_certified": w.norm_certified,
        "twists": w.twists.iter().map(|t| rat_to_string(t)).collect::<Vec<_>>(),
        "residual": w.approx_residual.as_ref().map(|r| rat_to_string(r)),
        "verified": verified,
    });
    Ok(Reply {
        result,
        exactness,
        verdict: Verdict::Decided,
    })
}

/// Partition the integral search across scoped worker threads and merge the
/// stripe outcomes deterministically (lowest stripe wins ties).
fn z_equivalent_parallel(
    q1: &QuadraticForm,
    q2: &QuadraticForm,
    budget: &Rat,
    threads: usize,
) -> Result<EquivOutcome> {
    if threads <= 1 {
        return Ok(reduce::z_equivalent(q1, q2, budget)?);
    }
    let results: Vec<sforms_core::error::Result<EquivOutcome>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|stripe| {
                scope.spawn(move || reduce::z_equivalent_striped(q1, q2, budget, stripe, threads))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("stripe worker panicked"))
            .collect()
    });
    let mut saw_not_equivalent = false;
    let mut saw_inconclusive = false;
    for r in results {
        match r? {
            EquivOutcome::Equivalent(c) => return Ok(EquivOutcome::Equivalent(c)),
            EquivOutcome::NotEquivalent => saw_not_equivalent = true,
            EquivOutcome::Inconclusive => saw_inconclusive = true,
        }
    }
    // NotEquivalent comes from invariants or the complete definite path and
    // is stripe-independent
    if saw_not_equivalent {
        Ok(EquivOutcome::NotEquivalent)
    } else if saw_inconclusive {
        Ok(EquivOutcome::Inconclusive)
    } else {
        Ok(EquivOutcome::NotEquivalent)
    }
}

fn cmd_equiv(a: &EquivArgs) -> Result<Reply> {
    let q1 = load_form(&a.q1)?;
    let q2 = load_form(&a.q2)?;
    let budget = parse_rat(&a.budget).map_err(|e| anyhow!("{e}"))?;
    let (outcome, ring_label) = match a.ring.to_lowercase().as_str() {
        "z" => (
            z_equivalent_parallel(&q1, &q2, &budget, resolve_threads(a.threads))?,
            "Z".to_string(),
        ),
        "zs" => {
            let s = parse_places(&a.places)?;
            let zb = ZsBudget {
                b_inf: budget.clone(),
                k_max: a.kmax,
            };
            let label = format!("Z_S({s})");
            (reduce::zs_equivalent(&q1, &q2, &s, &zb)?, label)
        }
        other => bail!("unknown ring {other:?}: expected z or zs"),
    };
    let (verdict, tag, gamma, ring) = match &outcome {
        EquivOutcome::Equivalent(c) => {
            let ring = match &c.ring {
                Ring::Z => "Z".to_string(),
                Ring::ZS(s) => format!("Z_S({s})"),
            };
            (
                Verdict::Decided,
                "equivalent",
                Some(matrix_value(&c.gamma)),
                ring,
            )
        }
        EquivOutcome::NotEquivalent => (Verdict::Decided, "not-equivalent", None, ring_label),
        EquivOutcome::Inconclusive => (Verdict::Inconclusive, "inconclusive", None, ring_label),
    };
    let result = json!({
        "outcome": tag,
        "gamma": gamma,
        "ring": ring,
        "budget": rat_to_string(&budget),
    });
    Ok(Reply {
        result,
        exactness: "exact".into(),
        verdict,
    })
}

fn cmd_reduce(a: &ReduceArgs) -> Result<Reply> {
    let q = load_form(&a.form)?;
    let (red, gamma) = reduce::minkowski_reduce(&q)?;
    Ok(Reply::exact(json!({
        "reduced": form_value(&red),
        "polynomial": red.to_polynomial_string(),
        "gamma": matrix_value(&gamma),
        "norm_cap": rat_value(&reduce::reduced_norm_cap(q.dim(), &abs_nu(&red.det(), Place::Infinity))),
    })))
}

fn cmd_enumerate(a: &EnumerateArgs) -> Result<Reply> {
    let forms = reduce::enumerate_reduced_definite(a.d, a.det)?;
    Ok(Reply::exact(json!({
        "count": forms.len(),
        "forms": forms.iter().map(form_value).collect::<Vec<_>>(),
    })))
}

fn cmd_autgroup(a: &AutgroupArgs) -> Result<Reply> {
    let q = load_form(&a.form)?;
    let aut = reduce::automorphism_generators(&q)?;
    Ok(Reply::exact(json!({
        "order": aut.order,
        "elements": aut.generators.iter().map(matrix_value).collect::<Vec<_>>(),
    })))
}

fn cmd_generators(a: &GeneratorsArgs) -> Result<Reply> {
    let u = load_matrices(&a.u)?;
    let m = load_matrices(&a.m)?;
    let s = parse_places(&a.places)?;
    let form = a.form.as_deref().map(load_form).transpose()?;
    let member = |g: &RMatrix| -> bool {
        let in_ring = g.is_gl_zs(&s).unwrap_or(false);
        let preserves = match &form {
            None => true,
            Some(q) => q.act(g).map(|r| r == *q).unwrap_or(false),
        };
        in_ring && preserves
    };
    let gens = reduce::assemble_generators(&u, &m, member)?;
    Ok(Reply::exact(json!({
        "count": gens.len(),
        "generators": gens.iter().map(matrix_value).collect::<Vec<_>>(),
    })))
}

fn build_ledger(d: usize, d1: &Option<String>, vinf: &Option<String>) -> Result<ConstantsLedger> {
    let ledger = match (d1, vinf) {
        (None, None) => ConstantsLedger::with_defaults(d)?,
        _ => {
            let d1v = d1.as_deref().map(parse_param).transpose()?.unwrap_or_else(|| rat_i64(1));
            let vv = vinf.as_deref().map(parse_param).transpose()?.unwrap_or_else(|| rat_i64(1));
            ConstantsLedger::new(d, d1v, vv)?
        }
    };
    Ok(ledger)
}

fn parse_case(case: &str, p0: Option<u64>) -> Result<EquivCase> {
    match case.to_lowercase().as_str() {
        "riso" => Ok(EquivCase::RIsotropic),
        "raniso" => {
            let p0 = p0.ok_or_else(|| anyhow!("--case raniso requires --p0"))?;
            Ok(EquivCase::RAnisotropic { p0 })
        }
        other => bail!("unknown case {other:?}: expected riso or raniso"),
    }
}

fn table_rows(table: &bounds::BoundTable, d1: f64, vinf: f64) -> (Vec<Value>, Vec<&'static str>) {
    let mut rows = Vec::new();
    let mut bases: Vec<&'static str> = Vec::new();
    for row in &table.rows {
        for b in row.value.parametric_bases() {
            if !bases.contains(&b) {
                bases.push(b);
            }
        }
        rows.push(json!({
            "place": row.place.to_string(),
            "value": powval_value(&row.value, d1, vinf),
            "strict": row.strict,
        }));
    }
    bases.sort_unstable();
    (rows, bases)
}

fn cmd_bounds(a: &BoundsArgs) -> Result<Reply> {
    let q1 = load_form(&a.q1)?;
    let s = parse_places(&a.places)?;
    let case = parse_case(&a.case, a.p0)?;
    let ledger = build_ledger(q1.dim(), &a.d1, &a.vinf)?;
    let d1f = sforms_core::arith::rat_to_f64(ledger.d1_value());
    let vf = sforms_core::arith::rat_to_f64(ledger.v_inf_value());
    let table = match a.kind.to_lowercase().as_str() {
        "equiv" => {
            let q2_arg = a
                .q2
                .as_deref()
                .ok_or_else(|| anyhow!("--kind equiv requires --q2"))?;
            let q2 = load_form(q2_arg)?;
            ledger.bound_equiv(&q1, &q2, &s, &case)?
        }
        "generators" => ledger.bound_generators(&q1, &s, &case)?,
        other => bail!("unknown kind {other:?}: expected equiv or generators"),
    };
    let (rows, bases) = table_rows(&table, d1f, vf);
    let exactness = parametric_tag(&bases);
    Ok(Reply {
        result: json!({
            "kind": a.kind.to_lowercase(),
            "case": a.case.to_lowercase(),
            "places": s.to_string(),
            "d1": rat_to_string(ledger.d1_value()),
            "v_inf": rat_to_string(ledger.v_inf_value()),
            "rows": rows,
        }),
        exactness,
        verdict: Verdict::Decided,
    })
}

fn cmd_volumes(a: &VolumesCmd) -> Result<Reply> {
    match a {
        VolumesCmd::VolGlZp { d, p } => {
            let v = bounds::vol_gl_zp(*d, *p)?;
            Ok(Reply::exact(json!({ "value": rat_to_string(&v) })))
        }
        VolumesCmd::Xi { p, m } => {
            let v = bounds::xi_p(*p, *m)?;
            Ok(Reply::exact(json!({ "value": rat_to_string(&v) })))
        }
        VolumesCmd::VolX1 { d, places, vinf } => {
            let s = parse_places(places)?;
            let vr = vinf.as_deref().map(parse_param).transpose()?;
            let v = bounds::vol_x1(*d, &s, vr.as_ref())?;
            let vf = vr
                .as_ref()
                .map(|q| sforms_core::arith::rat_to_f64(q))
                .unwrap_or(1.0);
            let bases = v.parametric_bases();
            Ok(Reply {
                exactness: parametric_tag(&bases),
                result: json!({ "value": powval_value(&v, 1.0, vf) }),
                verdict: Verdict::Decided,
            })
        }
        VolumesCmd::VolWBall { d, p, n } => {
            let v = bounds::vol_w_ball(*d, *p, *n)?;
            Ok(Reply::exact(json!({ "value": rat_to_string(&v) })))
        }
        VolumesCmd::Orbit {
            form,
            places,
            d1,
            vinf,
        } => {
            let q = load_form(form)?;
            let s = parse_places(places)?;
            let ledger = build_ledger(q.dim(), d1, vinf)?;
            let v = ledger.volume_orbit_bound(&q, &s)?;
            let bases = v.parametric_bases();
            Ok(Reply {
                exactness: parametric_tag(&bases),
                result: json!({
                    "value": powval_value(
                        &v,
                        sforms_core::arith::rat_to_f64(ledger.d1_value()),
                        sforms_core::arith::rat_to_f64(ledger.v_inf_value()),
                    ),
                }),
                verdict: Verdict::Decided,
            })
        }
        VolumesCmd::MahlerBound { d, alpha1 } => {
            let a1 = parse_rat(alpha1).map_err(|e| anyhow!("{e}"))?;
            let v = bounds::mahler_bound(*d, &a1)?;
            Ok(Reply::exact(json!({ "value": powval_value(&v, 1.0, 1.0) })))
        }
        VolumesCmd::Recurrence { d, place } => {
            let nu = parse_place(place)?;
            let (c, theta) = bounds::recurrence_constants(*d, nu)?;
            Ok(Reply::exact(json!({
                "c": rat_to_string(&c),
                "theta": rat_to_string(&theta),
            })))
        }
    }
}

fn lattice_of(args: &LatticeArgs) -> Result<SLattice> {
    let basis = load_matrix(&args.basis)?;
    let s = parse_places(&args.places)?;
    Ok(SLattice::new(s, basis)?)
}

fn cmd_lattice(a: &LatticeCmd) -> Result<Reply> {
    match a {
        LatticeCmd::Covolume(args) => {
            let l = lattice_of(args)?;
            Ok(Reply::exact(json!({
                "covolume": rat_to_string(l.covolume()),
                "dim": l.dim(),
                "places": l.place_set().to_string(),
            })))
        }
        LatticeCmd::Systole { lat, radius } => {
            let l = lattice_of(lat)?;
            let sys = l.systole(*radius)?;
            Ok(Reply::exact(json!({
                "alpha1_sq": rat_to_string(&sys.alpha1.square()),
                "witness": sys.witness.iter().map(|x| rat_to_string(x)).collect::<Vec<_>>(),
                "coordinates": sys.coordinates,
                "certified": sys.certified,
                "radius": sys.radius,
            })))
        }
        LatticeCmd::Mahler(args) => {
            let l = lattice_of(args)?;
            let basis = l.mahler_basis()?;
            Ok(Reply::exact(json!({
                "basis": matrix_value(&basis),
                "det": rat_to_string(&basis.det()?),
                "inf_norm": rat_to_string(&basis.nu_norm(Place::Infinity)),
            })))
        }
        LatticeCmd::Submodules { lat, rank } => {
            let l = lattice_of(lat)?;
            let subs = l.submodules_below_one(*rank)?;
            let rows: Vec<Value> = subs
                .iter()
                .map(|sub| {
                    json!({
                        "rank": sub.rank,
                        "covolume_sq": rat_to_string(&sub.covolume.square()),
                        "wedge": sub.wedge,
                        "generators": sub.generators.iter()
                            .map(|g| g.iter().map(|x| rat_to_string(x)).collect::<Vec<_>>())
                            .collect::<Vec<_>>(),
                    })
                })
                .collect();
            Ok(Reply::exact(json!({
                "count": rows.len(),
                "submodules": rows,
            })))
        }
    }
}

fn cmd_good_check(a: &GoodCheckArgs) -> Result<Reply> {
    let coeffs = parse_rat_list(&a.coeffs)?;
    let report = slattice::good_check(&coeffs, a.p, a.depth)?;
    Ok(Reply::exact(json!({
        "degree": report.degree,
        "p": report.p,
        "c": rat_to_string(&report.c),
        "theta": rat_to_string(&report.theta),
        "max_depth": report.max_depth,
        "worst_ratio_pow": rat_to_string(&report.worst_ratio_pow),
        "passed": report.passed,
    })))
}

fn cmd_selftest(a: &SelftestArgs) -> Result<Reply> {
    let results = match a.criterion {
        Some(id) => {
            if !(1..=selftest::CRITERIA).contains(&id) {
                bail!("criterion id must be in 1..={}", selftest::CRITERIA);
            }
            vec![selftest::run_criterion(id)]
        }
        None => selftest::run_all(),
    };
    let passed = results.iter().all(|r| r.passed);
    Ok(Reply {
        result: json!({
            "criteria": results,
            "passed": passed,
        }),
        exactness: "exact".into(),
        verdict: Verdict::Decided,
    })
}

// ===========================================================================
// table rendering (derived from the JSON envelope)
// ===========================================================================

fn render_table(envelope: &Value) -> String {
    let mut out = String::new();
    let cmd = envelope["command"].as_str().unwrap_or("?");
    let exactness = envelope["exactness"].as_str().unwrap_or("?");
    out.push_str(&format!(
        "# {cmd} — {exactness} (schema {}, v{})\n",
        envelope["schema"],
        envelope["version"].as_str().unwrap_or("?")
    ));
    let result = &envelope["result"];
    // selftest: one line per criterion
    if cmd == "selftest" {
        if let Some(criteria) = result["criteria"].as_array() {
            for c in criteria {
                let verdict = if c["passed"].as_bool().unwrap_or(false) {
                    "PASS"
                } else {
                    "FAIL"
                };
                out.push_str(&format!(
                    "criterion {:02} [{}] {}: {} ({} ms)\n",
                    c["id"].as_u64().unwrap_or(0),
                    c["name"].as_str().unwrap_or("?"),
                    verdict,
                    c["detail"].as_str().unwrap_or(""),
                    c["millis"].as_u64().unwrap_or(0),
                ));
            }
            let all = result["passed"].as_bool().unwrap_or(false);
            out.push_str(&format!(
                "overall: {}\n",
                if all { "PASS" } else { "FAIL" }
            ));
            return out;
        }
    }
    // single-value results print just the value
    if let Some(obj) = result.as_object() {
        if obj.len() == 1 {
            if let Some(v) = obj.get("value") {
                render_node(v, 0, &mut out);
                return out;
            }
        }
    }
    render_node(result, 0, &mut out);
    out
}

fn is_scalar(v: &Value) -> bool {
    matches!(
        v,
        Value::Null | Value::Bool(_) | Value::Number(_) | Value::String(_)
    )
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::Null => "—".into(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        _ => unreachable!("scalar_text on a composite"),
    }
}

fn push_grid(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    for row in v.as_array().expect("grid") {
        let cells = row
            .as_array()
            .expect("grid row")
            .iter()
            .map(scalar_text)
            .collect::<Vec<_>>()
            .join("  ");
        out.push_str(&format!("{pad}{cells}\n"));
    }
}

/// Whether an array is a matrix-style grid (rows of scalars).
fn is_grid(v: &Value) -> bool {
    v.as_array().is_some_and(|rows| {
        !rows.is_empty()
            && rows.iter().all(|r| {
                r.as_array()
                    .is_some_and(|row| !row.is_empty() && row.iter().all(is_scalar))
            })
    })
}

fn render_node(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                render_entry(k, val, indent, out);
            }
        }
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                if is_scalar(item) {
                    out.push_str(&format!("{pad}- {}\n", scalar_text(item)));
                } else if is_grid(item) {
                    out.push_str(&format!("{pad}- [{i}]\n"));
                    push_grid(item, indent + 1, out);
                } else {
                    out.push_str(&format!("{pad}- [{i}]\n"));
                    render_node(item, indent + 1, out);
                }
            }
        }
        scalar => out.push_str(&format!("{pad}{}\n", scalar_text(scalar))),
    }
}

fn render_entry(key: &str, val: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    if is_scalar(val) {
        out.push_str(&format!("{pad}{key}: {}\n", scalar_text(val)));
        return;
    }
    if let Some(items) = val.as_array() {
        if items.iter().all(is_scalar) {
            let joined = items.iter().map(scalar_text).collect::<Vec<_>>().join(", ");
            out.push_str(&format!("{pad}{key}: [{joined}]\n"));
            return;
        }
        if is_grid(val) {
            out.push_str(&format!("{pad}{key}:\n"));
            push_grid(val, indent + 1, out);
            return;
        }
    }
    out.push_str(&format!("{pad}{key}:\n"));
    render_node(val, indent + 1, out);
}
