//! Problem files: `key: <json>` lines with `#` comments.
//!
//! Every file starts with `format: "cechlab/1"` and `kind: "<kind>"`. A value
//! may continue on following lines that start with whitespace. See
//! `docs/file-formats.md` for the per-kind keys.

use std::fs;
use std::path::{Path, PathBuf};

use cechlab_core::coeffs::{Automorphism, FiniteGroup};
use cechlab_core::connection::{Base, BundleModel, Transition};
use cechlab_core::{
    CMatrix, CentralExtension, CoefficientGroup, CoefficientKind, Involution, LoopPolynomial, Nerve, TransitionData,
    TwistedLocalSystem, C64,
};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::Failure;

pub const FORMAT: &str = "cechlab/1";
const MAX_VERTICES: usize = 4096;

/// Path and SHA-256 of every file read while loading a problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

pub struct ProblemFile {
    pub path: PathBuf,
    pub kind: String,
    body: Map<String, Value>,
}

fn bad(path: &Path, msg: impl std::fmt::Display) -> Failure {
    Failure::Input(format!("{}: {msg}", path.display()))
}

pub fn read_file(path: &Path, digests: &mut Vec<InputDigest>) -> Result<String, Failure> {
    let bytes = fs::read(path).map_err(|e| bad(path, e))?;
    let hash = Sha256::digest(&bytes);
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    let entry = InputDigest { path: path.display().to_string(), sha256: hex };
    if !digests.contains(&entry) {
        digests.push(entry);
    }
    String::from_utf8(bytes).map_err(|_| bad(path, "not valid UTF-8"))
}

impl ProblemFile {
    pub fn load(path: &Path, digests: &mut Vec<InputDigest>) -> Result<Self, Failure> {
        let text = read_file(path, digests)?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self, Failure> {
        let mut pairs: Vec<(usize, String, String)> = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if line.starts_with(char::is_whitespace) {
                match pairs.last_mut() {
                    Some((_, _, v)) => {
                        v.push('\n');
                        v.push_str(trimmed);
                        continue;
                    }
                    None => return Err(bad(path, format!("line {}: continuation without a key", no + 1))),
                }
            }
            let Some((key, value)) = line.split_once(':') else {
                return Err(bad(path, format!("line {}: expected `key: value`", no + 1)));
            };
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_') {
                return Err(bad(path, format!("line {}: invalid key {key:?}", no + 1)));
            }
            pairs.push((no + 1, key.to_string(), value.trim().to_string()));
        }
        let mut body = Map::new();
        for (no, key, raw) in pairs {
            let value: Value = serde_json::from_str(&raw).map_err(|e| bad(path, format!("line {no}: value of `{key}`: {e}")))?;
            if body.insert(key.clone(), value).is_some() {
                return Err(bad(path, format!("line {no}: duplicate key `{key}`")));
            }
        }
        match body.remove("format") {
            Some(Value::String(f)) if f == FORMAT => {}
            Some(other) => return Err(bad(path, format!("unsupported format {other}, expected \"{FORMAT}\""))),
            None => return Err(bad(path, "missing `format` header")),
        }
        let kind = match body.remove("kind") {
            Some(Value::String(k)) => k,
            _ => return Err(bad(path, "missing `kind` header")),
        };
        Ok(ProblemFile { path: path.to_path_buf(), kind, body })
    }

    pub fn expect_kind(&self, kinds: &[&str]) -> Result<(), Failure> {
        if kinds.contains(&self.kind.as_str()) {
            Ok(())
        } else {
            Err(bad(&self.path, format!("kind `{}` where {} was expected", self.kind, kinds.join(" or "))))
        }
    }

    pub fn body<T: DeserializeOwned>(&self) -> Result<T, Failure> {
        serde_json::from_value(Value::Object(self.body.clone())).map_err(|e| bad(&self.path, e))
    }

    fn resolve(&self, rel: &str) -> PathBuf {
        self.path.parent().unwrap_or(Path::new("")).join(rel)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NerveSpec {
    named: Option<String>,
    vertices: Option<usize>,
    #[serde(alias = "simplices")]
    maximal: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum NerveRef {
    Path(String),
    Inline(NerveSpec),
}

fn named_nerve(name: &str) -> Option<Result<Nerve, cechlab_core::Error>> {
    let (base, arg) = match name.split_once('-') {
        Some((b, a)) => (b, a.parse::<usize>().ok()),
        None => (name, None),
    };
    Some(match (base, arg) {
        ("circle", None) => Ok(Nerve::circle()),
        ("rp2", None) => Ok(Nerve::rp2_six()),
        ("simplex", Some(n)) if n <= 8 => Nerve::simplex(n),
        ("boundary", Some(n)) if n <= 8 => Nerve::boundary_of_simplex(n),
        _ => return None,
    })
}

fn build_nerve(spec: NerveSpec, path: &Path) -> Result<Nerve, Failure> {
    match spec {
        NerveSpec { named: Some(name), vertices: None, maximal: None } => {
            named_nerve(&name).ok_or_else(|| bad(path, format!("unknown nerve name {name:?}")))?.map_err(Failure::from)
        }
        NerveSpec { named: None, vertices: Some(v), maximal: Some(s) } if v <= MAX_VERTICES => Ok(Nerve::build(v, &s)?),
        NerveSpec { vertices: Some(v), .. } if v > MAX_VERTICES => Err(bad(path, format!("more than {MAX_VERTICES} vertices"))),
        _ => Err(bad(path, "a nerve needs either `named` or both `vertices` and `maximal`")),
    }
}

fn load_nerve_ref(owner: &ProblemFile, r: NerveRef, digests: &mut Vec<InputDigest>) -> Result<Nerve, Failure> {
    match r {
        NerveRef::Inline(spec) => build_nerve(spec, &owner.path),
        NerveRef::Path(rel) => {
            let file = ProblemFile::load(&owner.resolve(&rel), digests)?;
            load_nerve(&file)
        }
    }
}

pub fn load_nerve(file: &ProblemFile) -> Result<Nerve, Failure> {
    file.expect_kind(&["nerve"])?;
    build_nerve(file.body()?, &file.path)
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum InvolutionSpec {
    Identity,
    Negation,
}

impl From<InvolutionSpec> for Involution {
    fn from(s: InvolutionSpec) -> Self {
        match s {
            InvolutionSpec::Identity => Involution::Identity,
            InvolutionSpec::Negation => Involution::Negation,
        }
    }
}

fn parse_coefficients(s: &str, involution: Involution, path: &Path) -> Result<CoefficientGroup, Failure> {
    let kind = match s {
        "Z" => CoefficientKind::Integers,
        "R" => CoefficientKind::Reals,
        "U(1)" | "R/Z" => CoefficientKind::CircleRmodZ,
        _ => match s.strip_prefix("Z/").and_then(|n| n.parse::<u64>().ok()) {
            Some(n) => CoefficientKind::IntegersMod(n),
            None => return Err(bad(path, format!("unknown coefficients {s:?}; use Z, Z/n, R or U(1)"))),
        },
    };
    Ok(CoefficientGroup::new(kind, involution)?)
}

/// `degree` plus one value per canonical simplex.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CochainSpec {
    pub degree: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSpec {
    nerve: NerveRef,
    coefficients: String,
    #[serde(default = "identity")]
    involution: InvolutionSpec,
    #[serde(default)]
    twisted_edges: Vec<(usize, usize)>,
    tolerance: Option<f64>,
    cocycle: Option<CochainSpec>,
}

fn identity() -> InvolutionSpec {
    InvolutionSpec::Identity
}

pub struct SystemProblem {
    pub system: TwistedLocalSystem,
    pub cocycle: Option<CochainSpec>,
}

pub fn load_system(file: &ProblemFile, digests: &mut Vec<InputDigest>) -> Result<SystemProblem, Failure> {
    file.expect_kind(&["system"])?;
    let spec: SystemSpec = file.body()?;
    let nerve = load_nerve_ref(file, spec.nerve, digests)?;
    let mut coeff = parse_coefficients(&spec.coefficients, spec.involution.into(), &file.path)?;
    if let Some(t) = spec.tolerance {
        if !(t > 0.0 && t.is_finite()) {
            return Err(bad(&file.path, "tolerance must be positive"));
        }
        coeff = coeff.with_tolerance(t);
    }
    let system = TwistedLocalSystem::with_twisted_edges(nerve, coeff, &spec.twisted_edges)?;
    // revalidate through `new` so a non-cocycle twist is rejected
    let system = TwistedLocalSystem::new(system.nerve().clone(), *system.coeff(), system.twist().to_vec())?;
    Ok(SystemProblem { system, cocycle: spec.cocycle })
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum GroupSpec {
    Cyclic(usize),
    Quaternion,
    Product(Box<GroupSpec>, Box<GroupSpec>),
    Table(Vec<Vec<usize>>),
}

fn build_group(spec: &GroupSpec) -> Result<FiniteGroup, Failure> {
    Ok(match spec {
        GroupSpec::Cyclic(n) => FiniteGroup::cyclic(*n)?,
        GroupSpec::Quaternion => FiniteGroup::quaternion(),
        GroupSpec::Product(a, b) => build_group(a)?.direct_product(&build_group(b)?),
        GroupSpec::Table(t) => FiniteGroup::from_table(t.clone())?,
    })
}

fn build_involution(group: &FiniteGroup, map: Option<Vec<usize>>) -> Result<Automorphism, Failure> {
    Ok(match map {
        Some(m) => Automorphism::involution(group, m)?,
        None => Automorphism::identity(group),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionSpec {
    nerve: NerveRef,
    group: GroupSpec,
    sigma: Option<Vec<usize>>,
    /// `[i, j, g, ε]` for ascending edges; omitted edges carry `(e, +1)`.
    #[serde(default)]
    edges: Vec<(usize, usize, usize, i8)>,
}

pub fn load_transition(file: &ProblemFile, digests: &mut Vec<InputDigest>) -> Result<TransitionData, Failure> {
    file.expect_kind(&["transition"])?;
    let spec: TransitionSpec = file.body()?;
    let nerve = load_nerve_ref(file, spec.nerve, digests)?;
    let group = build_group(&spec.group)?;
    let sigma = build_involution(&group, spec.sigma)?;
    let mut g = vec![group.identity(); nerve.count(1)];
    let mut eps = vec![1i8; nerve.count(1)];
    for (i, j, x, s) in spec.edges {
        if i >= j {
            return Err(bad(&file.path, format!("edge [{i}, {j}] must be listed in ascending order")));
        }
        let e = nerve.edge_index(i, j).ok_or_else(|| bad(&file.path, format!("edge [{i}, {j}] is not in the nerve")))?;
        g[e] = x;
        eps[e] = s;
    }
    Ok(TransitionData::new(nerve, group, sigma, g, eps)?)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtensionSpec {
    cyclic: Option<(usize, usize)>,
    #[serde(default = "identity")]
    involution: InvolutionSpec,
    base: Option<GroupSpec>,
    base_sigma: Option<Vec<usize>>,
    hat: Option<GroupSpec>,
    hat_sigma: Option<Vec<usize>>,
    projection: Option<Vec<usize>>,
    section: Option<Vec<usize>>,
    kernel: Option<Vec<(usize, i64)>>,
}

pub fn load_extension(file: &ProblemFile) -> Result<CentralExtension, Failure> {
    file.expect_kind(&["extension"])?;
    let spec: ExtensionSpec = file.body()?;
    let involution: Involution = spec.involution.into();
    let ext = match spec {
        ExtensionSpec { cyclic: Some((n, m)), base: None, hat: None, projection: None, section: None, kernel: None, .. } => {
            CentralExtension::cyclic(n, m, involution)?
        }
        ExtensionSpec {
            cyclic: None,
            base: Some(base),
            base_sigma,
            hat: Some(hat),
            hat_sigma,
            projection: Some(projection),
            section: Some(section),
            kernel: Some(kernel),
            ..
        } => {
            let base = build_group(&base)?;
            let hat = build_group(&hat)?;
            let base_sigma = build_involution(&base, base_sigma)?;
            let hat_sigma = build_involution(&hat, hat_sigma)?;
            let coeff = CoefficientGroup::modular(kernel.len() as u64, involution)?;
            CentralExtension::new(base, base_sigma, hat, hat_sigma, projection, section, &kernel, coeff)?
        }
        _ => {
            return Err(bad(
                &file.path,
                "give either `cyclic: [n, m]` or all of base, hat, projection, section and kernel",
            ))
        }
    };
    ext.verify()?;
    Ok(ext)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LiftsSpec {
    lifts: Vec<usize>,
}

pub fn load_lifts(file: &ProblemFile) -> Result<Vec<usize>, Failure> {
    file.expect_kind(&["lifts"])?;
    Ok(file.body::<LiftsSpec>()?.lifts)
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum ComplexSpec {
    Real(f64),
    Pair(f64, f64),
}

impl From<ComplexSpec> for C64 {
    fn from(c: ComplexSpec) -> Self {
        match c {
            ComplexSpec::Real(x) => C64::new(x, 0.0),
            ComplexSpec::Pair(x, y) => C64::new(x, y),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomLoopSpec {
    band: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoopSpec {
    size: usize,
    /// `[m, [row-major entries]]`.
    #[serde(default)]
    modes: Vec<(i64, Vec<ComplexSpec>)>,
    random: Option<RandomLoopSpec>,
    central: Option<ComplexSpec>,
}

pub struct LoopProblem {
    pub lp: LoopPolynomial,
    pub central: C64,
}

/// Loads a loop; `random` loops are drawn from `rng`.
pub fn load_loop(file: &ProblemFile, rng: &mut impl rand::Rng) -> Result<LoopProblem, Failure> {
    file.expect_kind(&["loop"])?;
    let spec: LoopSpec = file.body()?;
    let n = spec.size;
    if n == 0 || n > 64 {
        return Err(bad(&file.path, "size must lie in 1..=64"));
    }
    let lp = match spec.random {
        Some(r) if spec.modes.is_empty() => {
            if r.band > 64 {
                return Err(bad(&file.path, "band must be at most 64"));
            }
            LoopPolynomial::random(n, r.band, rng)
        }
        Some(_) => return Err(bad(&file.path, "`random` and `modes` are exclusive")),
        None => {
            let mut entries = Vec::new();
            for (m, values) in spec.modes {
                if values.len() != n * n {
                    return Err(bad(&file.path, format!("mode {m}: {} entries, expected {}", values.len(), n * n)));
                }
                if m.unsigned_abs() > 64 {
                    return Err(bad(&file.path, format!("mode {m} beyond the band cap 64")));
                }
                let c: Vec<C64> = values.into_iter().map(C64::from).collect();
                entries.push((m, CMatrix::from_row_slice(n, n, &c)));
            }
            LoopPolynomial::new(n, entries)?
        }
    };
    if lp.modes().any(|(_, x)| x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
        return Err(bad(&file.path, "non-finite coefficient"));
    }
    Ok(LoopProblem { lp, central: spec.central.map(C64::from).unwrap_or_default() })
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum TransitionKind {
    Trivial { size: usize },
    Holonomy { phase: f64 },
    U1Clutching {
        degree: i64,
        #[serde(default)]
        homotopy: f64,
    },
    U2Clutching { degree: i64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corruption {
    pub chart: usize,
    pub from: usize,
    pub point: [f64; 2],
    pub angle: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleSpec {
    base: String,
    transition: TransitionKind,
    #[serde(default = "default_resolution")]
    resolution: usize,
    profile: Option<(f64, f64)>,
    #[serde(default)]
    corrupt: Vec<Corruption>,
}

fn default_resolution() -> usize {
    201
}

pub struct BundleProblem {
    pub model: BundleModel,
    pub corrupt: Vec<Corruption>,
}

pub fn load_bundle(file: &ProblemFile) -> Result<BundleProblem, Failure> {
    file.expect_kind(&["bundle"])?;
    let spec: BundleSpec = file.body()?;
    let base = match spec.base.as_str() {
        "interval" => Base::Interval,
        "circle" => Base::Circle,
        "sphere" => Base::Sphere,
        other => return Err(bad(&file.path, format!("unknown base {other:?}"))),
    };
    let transition = match spec.transition {
        TransitionKind::Trivial { size } => Transition::Trivial { size },
        TransitionKind::Holonomy { phase } => Transition::Holonomy { phase },
        TransitionKind::U1Clutching { degree, homotopy } => Transition::U1Clutching { degree, homotopy },
        TransitionKind::U2Clutching { degree } => Transition::U2Clutching { degree },
    };
    if spec.resolution > 4001 {
        return Err(bad(&file.path, "resolution above 4001"));
    }
    let mut model = BundleModel::new(base, transition, spec.resolution)?;
    if let Some((inner, outer)) = spec.profile {
        model = model.with_profile(inner, outer)?;
    }
    for c in &spec.corrupt {
        if c.chart >= model.chart_count() || c.from >= model.chart_count() || c.chart == c.from {
            return Err(bad(&file.path, format!("corruption names charts {} and {}", c.chart, c.from)));
        }
    }
    Ok(BundleProblem { model, corrupt: spec.corrupt })
}
