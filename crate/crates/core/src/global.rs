//! Global preference combining the per-category orders.
//!
//! `x < y` holds when `x` is strictly preferred for some category and, for
//! every category `Cj`, either `rd(x, Cj) <= rd(y, Cj)` or some category more
//! specific than `Cj` strictly prefers `x`. The relation is materialised
//! over the whole domain so that order properties and KLM postulates can be
//! checked exhaustively.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::checker::SpecificityRelation;
use crate::checker::{check_bottom, check_strict, check_typicality, CheckReport, Method, Status};
use crate::concept::{extension, ConceptExpr, Inclusion, InclusionKind};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::semantic::{ElementSet, SemanticModel};

/// Square boolean matrix stored as packed rows.
#[derive(Debug, Clone, PartialEq, Eq)]
struct BitMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Self {
            n,
            words,
            bits: vec![0; n * words],
        }
    }

    fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }

    fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    fn transpose(&self) -> Self {
        let mut t = Self::new(self.n);
        for i in 0..self.n {
            for j in self.ones(i) {
                t.set(j, i);
            }
        }
        t
    }

    fn ones(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.n;
        self.row(i).iter().enumerate().flat_map(move |(w, &bits)| {
            (0..64)
                .filter(move |b| bits >> b & 1 == 1)
                .map(move |b| w * 64 + b)
                .filter(move |&j| j < n)
        })
    }

    fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Per-category rd rows plus, for each category, the categories more
/// specific than it. Positions follow the model's (sorted) category order.
struct Combination<'a, T: Scalar> {
    rd: Vec<&'a [T]>,
    more_specific: Vec<Vec<usize>>,
}

impl<'a, T: Scalar> Combination<'a, T> {
    fn new(base: &'a SemanticModel<T>, spec: &SpecificityRelation) -> Result<Self> {
        for (a, b) in spec.pairs() {
            base.category_position(a)?;
            base.category_position(b)?;
        }
        let names: Vec<&str> = base.category_names().collect();
        let more_specific = names
            .iter()
            .map(|&j| {
                names
                    .iter()
                    .enumerate()
                    .filter(|(_, &h)| spec.contains(h, j))
                    .map(|(h, _)| h)
                    .collect()
            })
            .collect();
        Ok(Self {
            rd: base.categories().iter().map(|c| c.rd.as_slice()).collect(),
            more_specific,
        })
    }

    fn prefer(&self, x: usize, y: usize, lt: &mut Vec<bool>) -> bool {
        lt.clear();
        lt.extend(self.rd.iter().map(|rd| rd[x] < rd[y]));
        if !lt.iter().any(|&b| b) {
            return false;
        }
        self.rd
            .iter()
            .enumerate()
            .all(|(j, rd)| rd[x] <= rd[y] || self.more_specific[j].iter().any(|&h| lt[h]))
    }
}

/// Evaluates `x < y` directly, without materialising the relation.
pub fn global_prefer<T: Scalar>(
    base: &SemanticModel<T>,
    spec: &SpecificityRelation,
    x: usize,
    y: usize,
) -> Result<bool> {
    for e in [x, y] {
        if e >= base.domain_len() {
            return Err(Error::UnknownElement(format!("#{e}")));
        }
    }
    Ok(Combination::new(base, spec)?.prefer(x, y, &mut Vec::new()))
}

/// A multipreference model together with its materialised global
/// preference.
#[derive(Debug, Clone)]
pub struct CwmModel<T: Scalar> {
    base: SemanticModel<T>,
    specificity: SpecificityRelation,
    less: BitMatrix,
}

impl<T: Scalar> CwmModel<T> {
    /// Materialises `<` over all ordered pairs and checks that it is a
    /// strict partial order.
    pub fn build(base: SemanticModel<T>, specificity: SpecificityRelation) -> Result<Self> {
        let less = Self::materialise(&base, &specificity)?;
        let model = Self {
            base,
            specificity,
            less,
        };
        if let Some(x) = model.irreflexivity_violations().first() {
            return Err(Error::Inconsistent(format!(
                "global preference is not irreflexive at `{}`",
                model.base.domain()[*x].id
            )));
        }
        if let Some((x, y, z)) = model.transitivity_violations(1).first() {
            let id = |e: usize| model.base.domain()[e].id.as_str();
            return Err(Error::Inconsistent(format!(
                "global preference is not transitive: {} < {} and {} < {} but not {} < {}",
                id(*x),
                id(*y),
                id(*y),
                id(*z),
                id(*x),
                id(*z)
            )));
        }
        Ok(model)
    }

    fn materialise(base: &SemanticModel<T>, spec: &SpecificityRelation) -> Result<BitMatrix> {
        let comb = Combination::new(base, spec)?;
        let n = base.domain_len();
        let mut less = BitMatrix::new(n);
        let mut scratch = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if comb.prefer(x, y, &mut scratch) {
                    less.set(x, y);
                }
            }
        }
        Ok(less)
    }

    pub fn base(&self) -> &SemanticModel<T> {
        &self.base
    }

    pub fn specificity(&self) -> &SpecificityRelation {
        &self.specificity
    }

    /// `x < y` in the materialised relation.
    pub fn prefers(&self, x: usize, y: usize) -> bool {
        self.less.get(x, y)
    }

    pub fn global_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.less.n)
            .flat_map(|x| self.less.ones(x).map(move |y| (x, y)))
            .collect()
    }

    pub fn pair_count(&self) -> usize {
        self.less.count()
    }

    /// `min_<(S)`.
    pub fn minimal(&self, set: &ElementSet) -> ElementSet {
        set.iter()
            .copied()
            .filter(|&u| !set.iter().any(|&z| self.less.get(z, u)))
            .collect()
    }

    /// `(T(C))^I = min_<(C^I)`.
    pub fn typicality_extension(&self, c: &ConceptExpr) -> Result<ElementSet> {
        Ok(self.minimal(&extension(&self.base, c)?))
    }

    /// Model-checks an arbitrary inclusion. Category-to-category inclusions
    /// use the BMU-based conditions; everything else is decided by set
    /// inclusion over the domain, with typicality read off the global
    /// preference.
    pub fn check(&self, inclusion: &Inclusion) -> Result<CheckReport<T>> {
        let names: Vec<&str> = self.base.category_names().collect();
        inclusion.lhs.resolve(names.iter().copied())?;
        inclusion.rhs.resolve(names.iter().copied())?;
        match (inclusion.kind, inclusion.lhs.as_name(), &inclusion.rhs) {
            (InclusionKind::Strict, Some(a), ConceptExpr::Name(b)) => {
                return check_strict(&self.base, a, b)
            }
            (InclusionKind::Strict, Some(a), ConceptExpr::Bot) => {
                return check_bottom(&self.base, a)
            }
            (InclusionKind::Defeasible, Some(a), ConceptExpr::Name(b)) => {
                return check_typicality(&self.base, a, b)
            }
            _ => {}
        }
        let left = match inclusion.kind {
            InclusionKind::Strict => extension(&self.base, &inclusion.lhs)?,
            InclusionKind::Defeasible => self.typicality_extension(&inclusion.lhs)?,
        };
        let right = extension(&self.base, &inclusion.rhs)?;
        let uncovered: ElementSet = left.difference(&right).copied().collect();
        Ok(CheckReport {
            inclusion: inclusion.clone(),
            status: if uncovered.is_empty() {
                Status::Holds
            } else {
                Status::Fails
            },
            method: Method::SetInclusion,
            plausibility: None,
            set_inclusion: Some(uncovered.is_empty()),
            witnesses: self.base.element_ids(&uncovered),
        })
    }

    fn irreflexivity_violations(&self) -> Vec<usize> {
        (0..self.less.n).filter(|&x| self.less.get(x, x)).collect()
    }

    /// Triples `x < y < z` without `x < z`, at most `limit` of them.
    fn transitivity_violations(&self, limit: usize) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for x in 0..self.less.n {
            let rx = self.less.row(x);
            for y in self.less.ones(x) {
                let ry = self.less.row(y);
                if ry.iter().zip(rx).all(|(a, b)| a & !b == 0) {
                    continue;
                }
                for z in self.less.ones(y) {
                    if !self.less.get(x, z) {
                        out.push((x, y, z));
                        if out.len() >= limit {
                            return out;
                        }
                    }
                }
            }
        }
        out
    }

    /// Elements lying on a cycle of `<` (Kahn's algorithm leftovers).
    fn cyclic_elements(&self) -> Vec<usize> {
        let n = self.less.n;
        let pred = self.less.transpose();
        let mut indegree: Vec<usize> = (0..n).map(|y| pred.ones(y).count()).collect();
        let mut ready: Vec<usize> = (0..n).filter(|&y| indegree[y] == 0).collect();
        let mut removed = vec![false; n];
        while let Some(x) = ready.pop() {
            removed[x] = true;
            for y in self.less.ones(x) {
                indegree[y] -= 1;
                if indegree[y] == 0 {
                    ready.push(y);
                }
            }
        }
        (0..n).filter(|&x| !removed[x]).collect()
    }

    /// `x < y` with some `z` comparable to neither side in the required
    /// direction, at most `limit` of them.
    fn modularity_violations(&self, limit: usize) -> Vec<(usize, usize, usize)> {
        let pred = self.less.transpose();
        let n = self.less.n;
        let mut out = Vec::new();
        for x in 0..n {
            for y in self.less.ones(x) {
                // need every z in succ(x) ∪ pred(y)
                let covered = self
                    .less
                    .row(x)
                    .iter()
                    .zip(pred.row(y))
                    .map(|(a, b)| a | b)
                    .collect::<Vec<_>>();
                for z in 0..n {
                    if covered[z / 64] >> (z % 64) & 1 == 0 {
                        out.push((x, y, z));
                        if out.len() >= limit {
                            return out;
                        }
                    }
                }
            }
        }
        out
    }

    fn ids(&self, es: &[usize]) -> Vec<String> {
        es.iter()
            .map(|&e| self.base.domain()[e].id.clone())
            .collect()
    }

    /// Order properties of `<` and of each category preference, plus the
    /// consistency of the stored tables.
    pub fn verify_preferential(&self) -> PropertyReport {
        const LIMIT: usize = 20;
        let mut checks = Vec::new();

        let issues = self.base.consistency_issues();
        checks.push(PropertyCheck::from_violations(
            "model_consistency",
            issues
                .into_iter()
                .map(|i| Violation {
                    instance: i,
                    witnesses: Vec::new(),
                })
                .collect(),
        ));

        let mut cat_violations = Vec::new();
        for c in self.base.categories() {
            cat_violations.extend(category_order_violations(&self.base, &c.name, &c.rd, LIMIT));
        }
        checks.push(PropertyCheck::from_violations(
            "category_orders",
            cat_violations,
        ));

        let irr = self.irreflexivity_violations();
        let irr_check = PropertyCheck::from_violations(
            "irreflexivity",
            irr.iter()
                .take(LIMIT)
                .map(|&x| Violation {
                    instance: format!("{0} < {0}", self.base.domain()[x].id),
                    witnesses: self.ids(&[x]),
                })
                .collect(),
        );
        let trans_check = PropertyCheck::from_violations(
            "transitivity",
            self.transitivity_violations(LIMIT)
                .into_iter()
                .map(|(x, y, z)| {
                    let w = self.ids(&[x, y, z]);
                    Violation {
                        instance: format!("{0} < {1}, {1} < {2}, not {0} < {2}", w[0], w[1], w[2]),
                        witnesses: w,
                    }
                })
                .collect(),
        );
        let cyclic = self.cyclic_elements();
        let wf_check = PropertyCheck::from_violations(
            "well_foundedness",
            if cyclic.is_empty() {
                Vec::new()
            } else {
                vec![Violation {
                    instance: "elements on a cycle of <".into(),
                    witnesses: self.ids(&cyclic),
                }]
            },
        );
        let preferential_ok = irr_check.passed() && trans_check.passed() && wf_check.passed();
        checks.push(irr_check);
        checks.push(trans_check);
        checks.push(wf_check);
        checks.push(PropertyCheck {
            check: "preferential".into(),
            status: if preferential_ok {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            informational: false,
            checked: 3,
            skipped: 0,
            violations: Vec::new(),
        });

        let mut modular = PropertyCheck::from_violations(
            "modularity",
            self.modularity_violations(LIMIT)
                .into_iter()
                .map(|(x, y, z)| {
                    let w = self.ids(&[x, y, z]);
                    Violation {
                        instance: format!(
                            "{0} < {1} but neither {0} < {2} nor {2} < {1}",
                            w[0], w[1], w[2]
                        ),
                        witnesses: w,
                    }
                })
                .collect(),
        );
        modular.informational = true;
        checks.push(modular);
        PropertyReport { checks }
    }

    /// Checks the preferential postulates for `C |~ D := min_<(C^I) ⊆ D^I`
    /// over every combination of concepts in `pool`.
    pub fn verify_klm(&self, pool: &[ConceptExpr]) -> Result<PropertyReport> {
        const LIMIT: usize = 20;
        let ext: Vec<ElementSet> = pool
            .iter()
            .map(|c| extension(&self.base, c))
            .collect::<Result<_>>()?;
        let min: Vec<ElementSet> = ext.iter().map(|e| self.minimal(e)).collect();
        let p = pool.len();
        let entails = |c: usize, d: usize| min[c].is_subset(&ext[d]);
        let show = |i: usize| pool[i].to_string();
        let mut by_extension: BTreeMap<&ElementSet, usize> = BTreeMap::new();
        for (i, e) in ext.iter().enumerate() {
            by_extension.entry(e).or_insert(i);
        }

        let mut reflexivity = Tally::new("reflexivity", LIMIT);
        let mut lle = Tally::new("left_logical_equivalence", LIMIT);
        let mut rw = Tally::new("right_weakening", LIMIT);
        let mut and = Tally::new("and", LIMIT);
        let mut or = Tally::new("or", LIMIT);
        let mut cm = Tally::new("cautious_monotonicity", LIMIT);

        for c in 0..p {
            let ok = entails(c, c);
            reflexivity.record(ok, || {
                (
                    format!("{0} |~ {0}", show(c)),
                    self.base
                        .element_ids(&min[c].difference(&ext[c]).copied().collect()),
                )
            });
        }
        for c in 0..p {
            for c2 in 0..p {
                if c == c2 || ext[c] != ext[c2] {
                    continue;
                }
                for d in 0..p {
                    lle.record(entails(c, d) == entails(c2, d), || {
                        (
                            format!(
                                "{} and {} are equivalent but disagree on {}",
                                show(c),
                                show(c2),
                                show(d)
                            ),
                            Vec::new(),
                        )
                    });
                }
            }
        }
        let mut min_of_meet: BTreeMap<(usize, usize), ElementSet> = BTreeMap::new();
        let mut meet_ext: BTreeMap<(usize, usize), ElementSet> = BTreeMap::new();
        for c in 0..p {
            for d in 0..p {
                let cd = entails(c, d);
                for e in 0..p {
                    let ce = entails(c, e);
                    if cd && ext[d].is_subset(&ext[e]) {
                        rw.record(ce, || {
                            (
                                format!(
                                    "{0} |~ {1}, {1} ⊑ {2}, but not {0} |~ {2}",
                                    show(c),
                                    show(d),
                                    show(e)
                                ),
                                self.base
                                    .element_ids(&min[c].difference(&ext[e]).copied().collect()),
                            )
                        });
                    }
                    if cd && ce {
                        let de_ext = match meet_ext.get(&(d, e)) {
                            Some(x) => x,
                            None => {
                                let de = ConceptExpr::and(pool[d].clone(), pool[e].clone());
                                meet_ext
                                    .entry((d, e))
                                    .or_insert(extension(&self.base, &de)?)
                            }
                        };
                        and.record(min[c].is_subset(de_ext), || {
                            (
                                format!(
                                    "{0} |~ {1}, {0} |~ {2}, but not {0} |~ {1} & {2}",
                                    show(c),
                                    show(d),
                                    show(e)
                                ),
                                self.base
                                    .element_ids(&min[c].difference(de_ext).copied().collect()),
                            )
                        });
                        let meet_min = min_of_meet.entry((c, d)).or_insert_with(|| {
                            self.minimal(&ext[c].intersection(&ext[d]).copied().collect())
                        });
                        cm.record(meet_min.is_subset(&ext[e]), || {
                            (
                                format!(
                                    "{0} |~ {1}, {0} |~ {2}, but not {0} & {1} |~ {2}",
                                    show(c),
                                    show(d),
                                    show(e)
                                ),
                                self.base
                                    .element_ids(&meet_min.difference(&ext[e]).copied().collect()),
                            )
                        });
                    }
                    if ce && entails(d, e) {
                        let union: ElementSet = ext[c].union(&ext[d]).copied().collect();
                        match by_extension.get(&union) {
                            Some(&f) => or.record(entails(f, e), || {
                                (
                                    format!(
                                        "{0} |~ {2}, {1} |~ {2}, but not ({0} or {1}) |~ {2} (as {3})",
                                        show(c),
                                        show(d),
                                        show(e),
                                        show(f)
                                    ),
                                    self.base.element_ids(&min[f].difference(&ext[e]).copied().collect()),
                                )
                            }),
                            None => or.skipped += 1,
                        }
                    }
                }
            }
        }
        Ok(PropertyReport {
            checks: vec![
                reflexivity.finish(),
                lle.finish(),
                rw.finish(),
                and.finish(),
                or.finish(),
                cm.finish(),
            ],
        })
    }
}

fn category_order_violations<T: Scalar>(
    base: &SemanticModel<T>,
    name: &str,
    rd: &[T],
    limit: usize,
) -> Vec<Violation> {
    let n = rd.len();
    let lt = |x: usize, y: usize| rd[x] < rd[y];
    let id = |e: usize| base.domain()[e].id.clone();
    let mut out = Vec::new();
    for x in 0..n {
        if lt(x, x) {
            out.push(Violation {
                instance: format!("<_{name} is not irreflexive at {}", id(x)),
                witnesses: vec![id(x)],
            });
        }
        for y in 0..n {
            if !lt(x, y) {
                continue;
            }
            for z in 0..n {
                if lt(y, z) && !lt(x, z) {
                    out.push(Violation {
                        instance: format!("<_{name} is not transitive"),
                        witnesses: vec![id(x), id(y), id(z)],
                    });
                }
                if !lt(x, z) && !lt(z, y) {
                    out.push(Violation {
                        instance: format!("<_{name} is not modular"),
                        witnesses: vec![id(x), id(y), id(z)],
                    });
                }
                if out.len() >= limit {
                    return out;
                }
            }
        }
    }
    out
}

struct Tally {
    check: &'static str,
    limit: usize,
    checked: usize,
    skipped: usize,
    failed: usize,
    violations: Vec<Violation>,
}

impl Tally {
    fn new(check: &'static str, limit: usize) -> Self {
        Self {
            check,
            limit,
            checked: 0,
            skipped: 0,
            failed: 0,
            violations: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> (String, Vec<String>)) {
        self.checked += 1;
        if !ok {
            self.failed += 1;
            if self.violations.len() < self.limit {
                let (instance, witnesses) = describe();
                self.violations.push(Violation {
                    instance,
                    witnesses,
                });
            }
        }
    }

    fn finish(self) -> PropertyCheck {
        let status = if self.failed > 0 {
            CheckStatus::Fail
        } else if self.checked == 0 && self.skipped > 0 {
            CheckStatus::NotExpressible
        } else {
            CheckStatus::Pass
        };
        PropertyCheck {
            check: self.check.into(),
            status,
            informational: false,
            checked: self.checked,
            skipped: self.skipped,
            violations: self.violations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Every instance needed a concept the language cannot express.
    NotExpressible,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub instance: String,
    pub witnesses: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub check: String,
    pub status: CheckStatus,
    /// Reported but not counted as a violation of the model.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub informational: bool,
    #[serde(default)]
    pub checked: usize,
    #[serde(default)]
    pub skipped: usize,
    pub violations: Vec<Violation>,
}

impl PropertyCheck {
    fn from_violations(check: &str, violations: Vec<Violation>) -> Self {
        Self {
            check: check.into(),
            status: if violations.is_empty() {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            informational: false,
            checked: 0,
            skipped: 0,
            violations,
        }
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn get(&self, check: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.check == check)
    }

    /// True when no non-informational check failed.
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.informational || c.passed())
    }
}

/// Every conjunction of 1..=`depth` distinct names (sorted, right-nested),
/// plus `Top` and `Bot`.
pub fn concept_pool<'a>(
    names: impl IntoIterator<Item = &'a str>,
    depth: usize,
) -> Vec<ConceptExpr> {
    let names: Vec<&str> = names
        .into_iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut pool = vec![ConceptExpr::Top, ConceptExpr::Bot];
    fn rec(
        names: &[&str],
        from: usize,
        left: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<ConceptExpr>,
    ) {
        if !cur.is_empty() {
            out.push(ConceptExpr::conjunction(
                cur.iter()
                    .map(|&i| ConceptExpr::name(names[i]))
                    .collect::<Vec<_>>(),
            ));
        }
        if left == 0 {
            return;
        }
        for i in from..names.len() {
            cur.push(i);
            rec(names, i + 1, left - 1, cur, out);
            cur.pop();
        }
    }
    rec(&names, 0, depth, &mut Vec::new(), &mut pool);
    pool
}

/// Depth-3 pool over the model's categories.
pub fn default_concept_pool<T: Scalar>(base: &SemanticModel<T>) -> Vec<ConceptExpr> {
    concept_pool(base.category_names(), 3)
}
