//! Model checking of inclusions between categories.
//!
//! A defeasible inclusion `T(Ci) ⊑ Cj` is accepted when every BMU of `Ci`
//! lies inside `Cj`:
//!
//! ```text
//! rd(BMU_Ci, Cj) = max_{x in Ci} rd(BMU_x, Cj) <= rd_max(Cj)
//! ```
//!
//! and `rd(BMU_Ci, Cj)` doubles as its plausibility score (lower is more
//! plausible). A strict inclusion `Ci ⊑ Cj` is accepted when
//!
//! ```text
//! rd(BMU_Ci, Cj) + rd_max(Ci) <= rd_max(Cj)
//! ```
//!
//! which approximates `Ci^I ⊆ Cj^I` using the map's topology. The exact
//! set inclusion over the realised domain is reported next to it.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::concept::{ConceptExpr, Inclusion, InclusionKind};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::semantic::{CategoryTable, ElementSet, SemanticModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// BMUs of the left category fall inside the right one.
    BmuContainment,
    /// The farthest BMU of the left category plus its own radius stays
    /// inside the right one (strict inclusion).
    RadiusContainment,
    SetInclusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    Fails,
    /// The left-hand category has no stimuli; the inclusion holds trivially.
    Vacuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport<T: Scalar> {
    pub inclusion: Inclusion,
    pub status: Status,
    pub method: Method,
    pub plausibility: Option<T>,
    /// Exact `lhs^I ⊆ rhs^I` over the realised domain, reported alongside
    /// strict condition checks.
    pub set_inclusion: Option<bool>,
    pub witnesses: Vec<String>,
}

impl<T: Scalar> CheckReport<T> {
    pub fn holds(&self) -> bool {
        self.status != Status::Fails
    }

    pub fn to_record(&self) -> ReportRecord<T> {
        ReportRecord {
            lhs: self.inclusion.lhs.to_string(),
            rhs: self.inclusion.rhs.to_string(),
            kind: self.inclusion.kind.as_str().to_string(),
            holds: self.holds(),
            status: self.status,
            plausibility: self.plausibility,
            method: self.method,
            set_inclusion: self.set_inclusion,
            witnesses: self.witnesses.clone(),
        }
    }
}

/// One JSON line of a check report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ReportRecord<T: Scalar> {
    pub lhs: String,
    pub rhs: String,
    pub kind: String,
    pub holds: bool,
    pub status: Status,
    #[serde(with = "crate::scalar::extended::option")]
    pub plausibility: Option<T>,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set_inclusion: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<String>,
}

fn table<'a, T: Scalar>(model: &'a SemanticModel<T>, name: &str) -> Result<&'a CategoryTable<T>> {
    model.category(name)
}

fn non_empty<'a, T: Scalar>(
    model: &'a SemanticModel<T>,
    name: &str,
) -> Result<&'a CategoryTable<T>> {
    let t = table(model, name)?;
    if t.is_empty() {
        Err(Error::EmptyCategory(name.to_string()))
    } else {
        Ok(t)
    }
}

/// `rd(BMU_Ci, Cj)`: the largest relative distance from `Cj` of any BMU of
/// an input stimulus of `Ci`.
pub fn rd_bmu_set<T: Scalar>(model: &SemanticModel<T>, ci: &str, cj: &str) -> Result<T> {
    let a = non_empty(model, ci)?;
    let b = non_empty(model, cj)?;
    let links = model.links();
    Ok(a.members
        .iter()
        .map(|&m| b.rd[links[m].bmu_element])
        .fold(T::zero(), T::max))
}

fn names(ci: &str, cj: &str) -> (ConceptExpr, ConceptExpr) {
    (ConceptExpr::name(ci), ConceptExpr::name(cj))
}

/// Checks `T(Ci) ⊑ Cj`.
pub fn check_typicality<T: Scalar>(
    model: &SemanticModel<T>,
    ci: &str,
    cj: &str,
) -> Result<CheckReport<T>> {
    let a = table(model, ci)?;
    let b = table(model, cj)?;
    let (l, r) = names(ci, cj);
    let inclusion = Inclusion::defeasible(l, r);
    if a.is_empty() {
        return Ok(CheckReport {
            inclusion,
            status: Status::Vacuous,
            method: Method::SetInclusion,
            plausibility: None,
            set_inclusion: None,
            witnesses: Vec::new(),
        });
    }
    if b.is_empty() {
        return Ok(CheckReport {
            inclusion,
            status: Status::Fails,
            method: Method::SetInclusion,
            plausibility: None,
            set_inclusion: None,
            witnesses: model.element_ids(&a.bmu_elements),
        });
    }
    let score = rd_bmu_set(model, ci, cj)?;
    let rd_max = b.rd_max.expect("non-empty category has rd_max");
    let holds = score <= rd_max;
    let witnesses = if holds {
        Vec::new()
    } else {
        let outside: ElementSet = a
            .bmu_elements
            .iter()
            .copied()
            .filter(|&e| b.rd[e] > rd_max || b.rd[e].is_nan())
            .collect();
        model.element_ids(&outside)
    };
    Ok(CheckReport {
        inclusion,
        status: if holds { Status::Holds } else { Status::Fails },
        method: Method::BmuContainment,
        plausibility: Some(score),
        set_inclusion: None,
        witnesses,
    })
}

/// Checks `Ci ⊑ Cj`.
pub fn check_strict<T: Scalar>(
    model: &SemanticModel<T>,
    ci: &str,
    cj: &str,
) -> Result<CheckReport<T>> {
    let a = table(model, ci)?;
    let b = table(model, cj)?;
    let (l, r) = names(ci, cj);
    let inclusion = Inclusion::strict(l, r);
    let uncovered: ElementSet = a.extension.difference(&b.extension).copied().collect();
    let exact = uncovered.is_empty();
    if a.is_empty() || b.is_empty() {
        return Ok(CheckReport {
            inclusion,
            status: if a.is_empty() {
                Status::Vacuous
            } else {
                Status::Fails
            },
            method: Method::SetInclusion,
            plausibility: None,
            set_inclusion: Some(exact),
            witnesses: model.element_ids(&uncovered),
        });
    }
    let score = rd_bmu_set(model, ci, cj)?;
    let holds = score + a.rd_max.unwrap() <= b.rd_max.unwrap();
    Ok(CheckReport {
        inclusion,
        status: if holds { Status::Holds } else { Status::Fails },
        method: Method::RadiusContainment,
        plausibility: None,
        set_inclusion: Some(exact),
        witnesses: model.element_ids(&uncovered),
    })
}

/// Checks `Ci ⊑ Bot`, i.e. that the category is empty.
pub fn check_bottom<T: Scalar>(model: &SemanticModel<T>, ci: &str) -> Result<CheckReport<T>> {
    let a = table(model, ci)?;
    Ok(CheckReport {
        inclusion: Inclusion::strict(ConceptExpr::name(ci), ConceptExpr::Bot),
        status: if a.extension.is_empty() {
            Status::Holds
        } else {
            Status::Fails
        },
        method: Method::SetInclusion,
        plausibility: None,
        set_inclusion: Some(a.extension.is_empty()),
        witnesses: model.element_ids(&a.extension),
    })
}

/// Every category-to-category check of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedKb<T: Scalar> {
    /// Strict and defeasible reports for all ordered pairs, in
    /// lexicographic pair order (strict first within a pair).
    pub reports: Vec<CheckReport<T>>,
    /// `Ci ⊑ Bot` for every category.
    pub bottom: Vec<CheckReport<T>>,
    /// Holding, non-vacuous defeasible inclusions, most plausible first.
    pub ranked: Vec<CheckReport<T>>,
}

impl<T: Scalar> ExtractedKb<T> {
    /// The set of inclusions the model satisfies.
    pub fn satisfied(&self) -> BTreeSet<Inclusion> {
        self.reports
            .iter()
            .chain(&self.bottom)
            .filter(|r| r.holds())
            .map(|r| r.inclusion.clone())
            .collect()
    }

    pub fn find(&self, inclusion: &Inclusion) -> Option<&CheckReport<T>> {
        self.reports
            .iter()
            .chain(&self.bottom)
            .find(|r| &r.inclusion == inclusion)
    }

    /// Knowledge base in the concept-language line format. Defeasible
    /// inclusions carry their plausibility as a trailing comment.
    pub fn to_kb_text(&self) -> String {
        let mut out = String::from("# strict inclusions\n");
        for r in self.reports.iter().chain(&self.bottom) {
            if r.inclusion.kind == InclusionKind::Strict && r.holds() {
                let _ = write!(out, "{}", r.inclusion);
                if r.status == Status::Vacuous {
                    out.push_str("  # vacuous");
                }
                out.push('\n');
            }
        }
        out.push_str(
            "# defeasible inclusions, most plausible first (lower score is more plausible)\n",
        );
        for r in &self.ranked {
            let _ = writeln!(
                out,
                "{}  # plausibility {}",
                r.inclusion,
                r.plausibility.expect("ranked reports carry a score")
            );
        }
        for r in &self.reports {
            if r.inclusion.kind == InclusionKind::Defeasible && r.status == Status::Vacuous {
                let _ = writeln!(out, "{}  # vacuous", r.inclusion);
            }
        }
        out
    }

    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in self.reports.iter().chain(&self.bottom) {
            out.push_str(&serde_json::to_string(&r.to_record()).expect("report serialises"));
            out.push('\n');
        }
        out
    }

    /// Fixed-width table for terminals.
    pub fn to_table(&self) -> String {
        let width = self
            .reports
            .iter()
            .map(|r| r.inclusion.to_string().len())
            .max()
            .unwrap_or(10)
            .max(9);
        let mut out = format!(
            "{:<width$}  {:<8}  {:<18}  {:<12}  {}\n",
            "inclusion", "status", "method", "plausibility", "exact"
        );
        for r in self.reports.iter().chain(&self.bottom) {
            let score = r
                .plausibility
                .map(|p| p.to_string())
                .unwrap_or_else(|| "-".into());
            let exact = match r.set_inclusion {
                Some(true) => "yes",
                Some(false) => "no",
                None => "-",
            };
            let _ = writeln!(
                out,
                "{:<width$}  {:<8}  {:<18}  {:<12}  {}",
                r.inclusion.to_string(),
                status_str(r.status),
                method_str(r.method),
                score,
                exact
            );
        }
        out
    }
}

pub fn status_str(s: Status) -> &'static str {
    match s {
        Status::Holds => "holds",
        Status::Fails => "fails",
        Status::Vacuous => "vacuous",
    }
}

pub fn method_str(m: Method) -> &'static str {
    match m {
        Method::BmuContainment => "bmu_containment",
        Method::RadiusContainment => "radius_containment",
        Method::SetInclusion => "set_inclusion",
    }
}

fn score_order<T: Scalar>(a: &CheckReport<T>, b: &CheckReport<T>) -> std::cmp::Ordering {
    let (pa, pb) = (a.plausibility.unwrap(), b.plausibility.unwrap());
    pa.partial_cmp(&pb)
        .unwrap_or(std::cmp::Ordering::Equal)
        .then_with(|| a.inclusion.cmp(&b.inclusion))
}

/// Runs both checks on every ordered pair of categories.
pub fn extract_kb<T: Scalar>(model: &SemanticModel<T>) -> ExtractedKb<T> {
    let names: Vec<&str> = model.category_names().collect();
    let mut reports = Vec::with_capacity(2 * names.len() * names.len());
    for &ci in &names {
        for &cj in &names {
            reports.push(check_strict(model, ci, cj).expect("declared categories"));
            reports.push(check_typicality(model, ci, cj).expect("declared categories"));
        }
    }
    let bottom = names
        .iter()
        .map(|&c| check_bottom(model, c).expect("declared category"))
        .collect();
    let mut ranked: Vec<CheckReport<T>> = reports
        .iter()
        .filter(|r| r.inclusion.kind == InclusionKind::Defeasible && r.plausibility.is_some())
        .filter(|r| r.holds())
        .cloned()
        .collect();
    ranked.sort_by(score_order);
    ExtractedKb {
        reports,
        bottom,
        ranked,
    }
}

/// `Ch ≻ Cj` pairs: irreflexive and transitively closed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpecificityRelation {
    pairs: BTreeSet<(String, String)>,
}

impl SpecificityRelation {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Transitive closure of `pairs`; fails with the offending cycle if the
    /// closure is not irreflexive.
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        let base: BTreeSet<(String, String)> = pairs
            .into_iter()
            .map(|(a, b)| (a.into(), b.into()))
            .collect();
        let nodes: Vec<&String> = base
            .iter()
            .flat_map(|(a, b)| [a, b])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let pos = |s: &String| nodes.binary_search(&s).unwrap();
        let k = nodes.len();
        let mut reach = vec![vec![false; k]; k];
        for (a, b) in &base {
            reach[pos(a)][pos(b)] = true;
        }
        for m in 0..k {
            for i in 0..k {
                if reach[i][m] {
                    let via = reach[m].clone();
                    for (r, v) in reach[i].iter_mut().zip(via) {
                        *r |= v;
                    }
                }
            }
        }
        if let Some(start) = (0..k).find(|&i| reach[i][i]) {
            return Err(Error::SpecificityCycle {
                cycle: find_cycle(&base, nodes[start]),
            });
        }
        let mut pairs = BTreeSet::new();
        for i in 0..k {
            for j in 0..k {
                if reach[i][j] {
                    pairs.insert((nodes[i].clone(), nodes[j].clone()));
                }
            }
        }
        Ok(Self { pairs })
    }

    /// `more ≻ less`.
    pub fn contains(&self, more: &str, less: &str) -> bool {
        self.pairs.contains(&(more.to_string(), less.to_string()))
    }

    pub fn pairs(&self) -> &BTreeSet<(String, String)> {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn to_json(&self) -> String {
        let pairs: Vec<[&str; 2]> = self
            .pairs
            .iter()
            .map(|(a, b)| [a.as_str(), b.as_str()])
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({ "pairs": pairs }))
            .expect("specificity serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Repr {
            pairs: Vec<(String, String)>,
        }
        let r: Repr = serde_json::from_str(text)
            .map_err(|e| Error::Input(format!("specificity file: {e}")))?;
        Self::from_pairs(r.pairs)
    }
}

/// Shortest cycle through `start` in the unclosed relation.
fn find_cycle(base: &BTreeSet<(String, String)>, start: &String) -> Vec<String> {
    use std::collections::{HashMap, VecDeque};
    let mut prev: HashMap<&String, &String> = HashMap::new();
    let mut queue = VecDeque::from([start]);
    while let Some(n) = queue.pop_front() {
        for (a, b) in base.iter().filter(|(a, _)| a == n) {
            if b == start {
                let mut path = vec![start.clone()];
                let mut cur = a;
                while cur != start {
                    path.push(cur.clone());
                    cur = prev[cur];
                }
                path.push(start.clone());
                let n = path.len();
                path[1..n - 1].reverse();
                return path;
            }
            if !prev.contains_key(b) {
                prev.insert(b, a);
                queue.push_back(b);
            }
        }
    }
    vec![start.clone(), start.clone()]
}

/// `Ci ≻ Cj` when `Ci ⊑ Cj` holds and `Cj ⊑ Ci` does not (strict checks),
/// then transitively closed.
pub fn derive_specificity<T: Scalar>(model: &SemanticModel<T>) -> Result<SpecificityRelation> {
    let names: Vec<&str> = model.category_names().collect();
    let k = names.len();
    let mut holds = vec![vec![false; k]; k];
    for (i, &a) in names.iter().enumerate() {
        for (j, &b) in names.iter().enumerate() {
            holds[i][j] = check_strict(model, a, b)?.holds();
        }
    }
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if i != j && holds[i][j] && !holds[j][i] {
                pairs.push((names[i], names[j]));
            }
        }
    }
    SpecificityRelation::from_pairs(pairs)
}
