//! The multipreference model read off a trained map.
//!
//! The domain holds every input stimulus, the weight vector of every
//! stimulus' best-matching unit and any caller-supplied probe vectors. Each
//! category gets a table of relative distances over that domain:
//!
//! ```text
//! rd(y, C) = min_{b in BMU_C} ||y - b|| / max_{x in C} ||x - BMU_x||
//! ```
//!
//! and the induced preference `x <_C y  iff  rd(x, C) < rd(y, C)`. The
//! extension of `C` is every element no farther (relatively) than the
//! farthest input stimulus of `C`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{euclidean, Scalar};
use crate::som::{check_vector, SomMap, Stimulus};

pub type ElementSet = BTreeSet<usize>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    InputStimulus,
    Bmu,
    Probe,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainElement<T: Scalar> {
    pub id: String,
    pub features: Vec<T>,
    pub origin: Origin,
}

/// Ties an input stimulus to its domain element and to its BMU.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StimulusLink {
    pub id: String,
    pub label: String,
    pub element: usize,
    pub bmu_unit: usize,
    pub bmu_element: usize,
}

/// A finite domain plus the stimulus/BMU bookkeeping needed to compute
/// relative distances.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain<T: Scalar> {
    pub input_dim: usize,
    pub elements: Vec<DomainElement<T>>,
    pub links: Vec<StimulusLink>,
}

/// Exact-equality key; `-0.0` and `0.0` collapse.
fn feature_key<T: Scalar>(features: &[T]) -> Vec<u64> {
    features
        .iter()
        .map(|v| {
            let f = v.to_f64_lossy();
            if f == 0.0 {
                0
            } else {
                f.to_bits()
            }
        })
        .collect()
}

/// Builds the domain `inputs ∪ {w_BMU(x)} ∪ probes`, deduplicated by exact
/// feature equality (the first occurrence keeps its id and origin).
pub fn build_domain<T: Scalar>(
    map: &SomMap<T>,
    data: &[Stimulus<T>],
    probes: &[Vec<T>],
) -> Result<Domain<T>> {
    if data.is_empty() {
        return Err(Error::Input("no input stimuli".into()));
    }
    let d = map.input_dim;
    let mut elements: Vec<DomainElement<T>> = Vec::new();
    let mut by_key: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut ids: HashMap<String, ()> = HashMap::new();

    let mut insert = |id: String, features: &[T], origin: Origin| -> usize {
        *by_key.entry(feature_key(features)).or_insert_with(|| {
            elements.push(DomainElement {
                id,
                features: features.to_vec(),
                origin,
            });
            elements.len() - 1
        })
    };

    let mut stimulus_elements = Vec::with_capacity(data.len());
    for s in data {
        check_vector(&s.features, d)?;
        if ids.insert(s.id.clone(), ()).is_some() {
            return Err(Error::Input(format!("duplicate stimulus id `{}`", s.id)));
        }
        stimulus_elements.push(insert(s.id.clone(), &s.features, Origin::InputStimulus));
    }
    let bmus: Vec<usize> = data
        .iter()
        .map(|s| map.find_bmu(&s.features))
        .collect::<Result<_>>()?;
    let mut bmu_elements: BTreeMap<usize, usize> = BTreeMap::new();
    for &unit in bmus.iter().collect::<BTreeSet<_>>() {
        let e = insert(format!("u{unit}"), &map.unit(unit).weights, Origin::Bmu);
        bmu_elements.insert(unit, e);
    }
    for (k, p) in probes.iter().enumerate() {
        check_vector(p, d)?;
        insert(format!("p{k}"), p, Origin::Probe);
    }
    let links = data
        .iter()
        .zip(stimulus_elements)
        .zip(&bmus)
        .map(|((s, element), &bmu_unit)| StimulusLink {
            id: s.id.clone(),
            label: s.label.clone(),
            element,
            bmu_unit,
            bmu_element: bmu_elements[&bmu_unit],
        })
        .collect();
    Ok(Domain {
        input_dim: d,
        elements,
        links,
    })
}

/// Per-category relative-distance table.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryTable<T: Scalar> {
    pub name: String,
    /// Indices into the model's stimulus links.
    pub members: Vec<usize>,
    /// Unit indices of `BMU_C`.
    pub bmu_set: BTreeSet<usize>,
    /// Domain elements carrying the weight vectors of `BMU_C`.
    pub bmu_elements: ElementSet,
    /// `max_{x in C} ||x - BMU_x||`; `None` for an empty category.
    pub precision: Option<T>,
    /// Relative distance of every domain element; `+inf` when undefined.
    pub rd: Vec<T>,
    pub rd_max: Option<T>,
    pub extension: ElementSet,
}

impl<T: Scalar> CategoryTable<T> {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Ratio with the degenerate case folded in: an exact-precision category
/// (denominator 0) admits only exact matches.
pub fn relative_distance_ratio<T: Scalar>(numerator: T, precision: T) -> T {
    if precision > T::zero() {
        numerator / precision
    } else if numerator == T::zero() {
        T::zero()
    } else {
        T::infinity()
    }
}

pub(crate) fn numerator<T: Scalar>(
    features: &[T],
    bmu_elements: &ElementSet,
    elements: &[DomainElement<T>],
) -> T {
    bmu_elements
        .iter()
        .map(|&b| euclidean(features, &elements[b].features))
        .fold(T::infinity(), T::min)
}

pub(crate) fn compute_table<T: Scalar>(
    name: &str,
    members: Vec<usize>,
    domain: &Domain<T>,
) -> CategoryTable<T> {
    let elements = &domain.elements;
    let links = &domain.links;
    let bmu_set = members.iter().map(|&m| links[m].bmu_unit).collect();
    let bmu_elements: ElementSet = members.iter().map(|&m| links[m].bmu_element).collect();
    if members.is_empty() {
        return CategoryTable {
            name: name.to_string(),
            members,
            bmu_set,
            bmu_elements,
            precision: None,
            rd: vec![T::infinity(); elements.len()],
            rd_max: None,
            extension: ElementSet::new(),
        };
    }
    let precision = members
        .iter()
        .map(|&m| {
            euclidean(
                &elements[links[m].element].features,
                &elements[links[m].bmu_element].features,
            )
        })
        .fold(T::zero(), T::max);
    let rd: Vec<T> = elements
        .iter()
        .map(|e| {
            relative_distance_ratio(numerator(&e.features, &bmu_elements, elements), precision)
        })
        .collect();
    let rd_max = members
        .iter()
        .map(|&m| rd[links[m].element])
        .fold(T::zero(), T::max);
    let extension = extension_from(&rd, Some(rd_max));
    CategoryTable {
        name: name.to_string(),
        members,
        bmu_set,
        bmu_elements,
        precision: Some(precision),
        rd,
        rd_max: Some(rd_max),
        extension,
    }
}

pub(crate) fn extension_from<T: Scalar>(rd: &[T], rd_max: Option<T>) -> ElementSet {
    match rd_max {
        Some(m) => rd
            .iter()
            .enumerate()
            .filter(|(_, &v)| v <= m)
            .map(|(i, _)| i)
            .collect(),
        None => ElementSet::new(),
    }
}

/// The multipreference model of a map: domain, stimulus links and one
/// relative-distance table per category (categories sorted by name).
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticModel<T: Scalar> {
    pub(crate) domain: Domain<T>,
    pub(crate) categories: Vec<CategoryTable<T>>,
    pub(crate) synthetic: bool,
    element_index: HashMap<String, usize>,
}

impl<T: Scalar> SemanticModel<T> {
    /// Builds the model for `data` on a trained `map`. Categories are the
    /// distinct labels of `data`.
    pub fn build(map: &SomMap<T>, data: &[Stimulus<T>], probes: &[Vec<T>]) -> Result<Self> {
        let categories: BTreeSet<String> = data.iter().map(|s| s.label.clone()).collect();
        let categories: Vec<String> = categories.into_iter().collect();
        Self::build_with_categories(map, data, probes, &categories)
    }

    /// As [`build`](Self::build) with an explicit category set; stimuli with
    /// other labels are rejected and declared categories without stimuli
    /// stay empty.
    pub fn build_with_categories(
        map: &SomMap<T>,
        data: &[Stimulus<T>],
        probes: &[Vec<T>],
        categories: &[String],
    ) -> Result<Self> {
        Self::from_domain(categories, build_domain(map, data, probes)?)
    }

    pub fn from_domain(categories: &[String], domain: Domain<T>) -> Result<Self> {
        let names: BTreeSet<&str> = categories.iter().map(String::as_str).collect();
        if names.len() != categories.len() {
            return Err(Error::Input("duplicate category name".into()));
        }
        for l in &domain.links {
            if !names.contains(l.label.as_str()) {
                return Err(Error::UnknownCategory(l.label.clone()));
            }
        }
        let tables = names
            .iter()
            .map(|&name| {
                let members = domain
                    .links
                    .iter()
                    .enumerate()
                    .filter(|(_, l)| l.label == name)
                    .map(|(i, _)| i)
                    .collect();
                compute_table(name, members, &domain)
            })
            .collect();
        Self::assemble(domain, tables, false)
    }

    /// A model given directly by relative-distance tables, without map
    /// geometry. Extensions are `{y : rd(y, C) <= rd_max}`. Used for
    /// hand-built and randomised models.
    pub fn from_rd_tables(ids: Vec<String>, tables: Vec<(String, Vec<T>, T)>) -> Result<Self> {
        let n = ids.len();
        let elements = ids
            .into_iter()
            .map(|id| DomainElement {
                id,
                features: Vec::new(),
                origin: Origin::Probe,
            })
            .collect();
        let mut categories = Vec::with_capacity(tables.len());
        for (name, rd, rd_max) in tables {
            if rd.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: rd.len(),
                });
            }
            if rd.iter().any(|v| v.is_nan() || *v < T::zero())
                || rd_max.is_nan()
                || rd_max < T::zero()
            {
                return Err(Error::Input(format!(
                    "category `{name}`: rd values must be >= 0"
                )));
            }
            categories.push(CategoryTable {
                extension: extension_from(&rd, Some(rd_max)),
                name,
                members: Vec::new(),
                bmu_set: BTreeSet::new(),
                bmu_elements: ElementSet::new(),
                precision: None,
                rd,
                rd_max: Some(rd_max),
            });
        }
        categories.sort_by(|a, b| a.name.cmp(&b.name));
        if categories.windows(2).any(|w| w[0].name == w[1].name) {
            return Err(Error::Input("duplicate category name".into()));
        }
        let domain = Domain {
            input_dim: 0,
            elements,
            links: Vec::new(),
        };
        Self::assemble(domain, categories, true)
    }

    pub(crate) fn assemble(
        domain: Domain<T>,
        mut categories: Vec<CategoryTable<T>>,
        synthetic: bool,
    ) -> Result<Self> {
        categories.sort_by(|a, b| a.name.cmp(&b.name));
        let mut element_index = HashMap::with_capacity(domain.elements.len());
        for (i, e) in domain.elements.iter().enumerate() {
            if element_index.insert(e.id.clone(), i).is_some() {
                return Err(Error::Input(format!(
                    "duplicate domain element id `{}`",
                    e.id
                )));
            }
        }
        Ok(Self {
            domain,
            categories,
            synthetic,
            element_index,
        })
    }

    pub fn domain(&self) -> &[DomainElement<T>] {
        &self.domain.elements
    }

    pub fn domain_len(&self) -> usize {
        self.domain.elements.len()
    }

    pub fn links(&self) -> &[StimulusLink] {
        &self.domain.links
    }

    pub fn input_dim(&self) -> usize {
        self.domain.input_dim
    }

    /// True for models built from raw rd tables rather than a map.
    pub fn is_synthetic(&self) -> bool {
        self.synthetic
    }

    pub fn categories(&self) -> &[CategoryTable<T>] {
        &self.categories
    }

    pub fn category_names(&self) -> impl Iterator<Item = &str> {
        self.categories.iter().map(|c| c.name.as_str())
    }

    pub fn category_position(&self, name: &str) -> Result<usize> {
        self.categories
            .binary_search_by(|c| c.name.as_str().cmp(name))
            .map_err(|_| Error::UnknownCategory(name.to_string()))
    }

    pub fn category(&self, name: &str) -> Result<&CategoryTable<T>> {
        Ok(&self.categories[self.category_position(name)?])
    }

    pub fn element_index(&self, id: &str) -> Result<usize> {
        self.element_index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownElement(id.to_string()))
    }

    pub fn element_ids(&self, set: &ElementSet) -> Vec<String> {
        set.iter()
            .map(|&i| self.domain.elements[i].id.clone())
            .collect()
    }

    /// Appends an element without touching the category tables; callers
    /// extend each `rd` row themselves.
    pub(crate) fn push_element(&mut self, element: DomainElement<T>) -> Result<usize> {
        let i = self.domain.elements.len();
        if self.element_index.insert(element.id.clone(), i).is_some() {
            return Err(Error::Input(format!(
                "duplicate domain element id `{}`",
                element.id
            )));
        }
        self.domain.elements.push(element);
        Ok(i)
    }

    fn check_element(&self, e: usize) -> Result<()> {
        if e < self.domain_len() {
            Ok(())
        } else {
            Err(Error::UnknownElement(format!("#{e}")))
        }
    }

    /// `rd(y, C)` for a domain element.
    pub fn relative_distance(&self, element: usize, category: &str) -> Result<T> {
        self.check_element(element)?;
        Ok(self.category(category)?.rd[element])
    }

    /// `rd(y, C)` for an arbitrary vector, against the category's BMU vectors.
    pub fn relative_distance_of(&self, features: &[T], category: &str) -> Result<T> {
        if self.synthetic {
            return Err(Error::Input("synthetic model has no geometry".into()));
        }
        check_vector(features, self.domain.input_dim)?;
        let c = self.category(category)?;
        let precision = c
            .precision
            .ok_or_else(|| Error::EmptyCategory(category.to_string()))?;
        Ok(relative_distance_ratio(
            numerator(features, &c.bmu_elements, &self.domain.elements),
            precision,
        ))
    }

    /// `x <_C y`.
    pub fn prefer(&self, category: &str, x: usize, y: usize) -> Result<bool> {
        self.check_element(x)?;
        self.check_element(y)?;
        let c = self.category(category)?;
        Ok(c.rd[x] < c.rd[y])
    }

    /// `min_{<_C}(C^I)`: the members of the extension at relative distance 0.
    pub fn typical_elements(&self, category: &str) -> Result<ElementSet> {
        let c = self.category(category)?;
        Ok(c.extension
            .iter()
            .copied()
            .filter(|&e| c.rd[e] == T::zero())
            .collect())
    }

    pub fn extension_of(&self, category: &str) -> Result<&ElementSet> {
        Ok(&self.category(category)?.extension)
    }

    pub fn all_elements(&self) -> ElementSet {
        (0..self.domain_len()).collect()
    }

    /// Compares the stored tables against a recomputation from the domain
    /// and stimulus links, and checks the structural invariants. Returns one
    /// message per discrepancy.
    pub fn consistency_issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        for c in &self.categories {
            if c.rd.len() != self.domain_len() {
                issues.push(format!(
                    "category `{}`: rd table has {} entries for {} elements",
                    c.name,
                    c.rd.len(),
                    self.domain_len()
                ));
                continue;
            }
            for (e, &v) in c.rd.iter().enumerate() {
                if v.is_nan() || v < T::zero() {
                    issues.push(format!(
                        "category `{}`: rd({}) = {v} is not a non-negative value",
                        c.name, self.domain.elements[e].id
                    ));
                }
            }
            if c.extension != extension_from(&c.rd, c.rd_max) {
                issues.push(format!(
                    "category `{}`: extension differs from {{y : rd(y) <= rd_max}}",
                    c.name
                ));
            }
            if self.synthetic {
                continue;
            }
            let typical: ElementSet = c
                .extension
                .iter()
                .copied()
                .filter(|&e| c.rd[e] == T::zero())
                .collect();
            if !c.bmu_elements.is_subset(&typical) {
                issues.push(format!(
                    "category `{}`: BMU elements {:?} are not all typical",
                    c.name,
                    self.element_ids(&c.bmu_elements.difference(&typical).copied().collect())
                ));
            }
            let fresh = compute_table(&c.name, c.members.clone(), &self.domain);
            for (e, (a, b)) in c.rd.iter().zip(&fresh.rd).enumerate() {
                if a != b {
                    issues.push(format!(
                        "category `{}`: stored rd({}) = {a} but recomputation gives {b}",
                        c.name, self.domain.elements[e].id
                    ));
                }
            }
            if c.precision != fresh.precision || c.rd_max != fresh.rd_max {
                issues.push(format!(
                    "category `{}`: stored precision/rd_max disagree with recomputation",
                    c.name
                ));
            }
            if c.bmu_set != fresh.bmu_set {
                issues.push(format!(
                    "category `{}`: BMU set disagrees with links",
                    c.name
                ));
            }
        }
        issues
    }

    pub fn to_snapshot(&self) -> ModelSnapshot<T> {
        let ids = |set: &ElementSet| self.element_ids(set);
        ModelSnapshot {
            input_dim: self.domain.input_dim,
            synthetic: self.synthetic,
            domain: self
                .domain
                .elements
                .iter()
                .map(|e| ElementRecord {
                    id: e.id.clone(),
                    origin: e.origin,
                    features: e.features.clone(),
                })
                .collect(),
            stimuli: self
                .domain
                .links
                .iter()
                .map(|l| LinkRecord {
                    id: l.id.clone(),
                    label: l.label.clone(),
                    element: self.domain.elements[l.element].id.clone(),
                    bmu_unit: l.bmu_unit,
                    bmu_element: self.domain.elements[l.bmu_element].id.clone(),
                })
                .collect(),
            categories: self
                .categories
                .iter()
                .map(|c| CategoryRecord {
                    name: c.name.clone(),
                    bmu_set: c.bmu_set.iter().copied().collect(),
                    precision: c.precision,
                    rd_max: c.rd_max,
                    rd: self
                        .domain
                        .elements
                        .iter()
                        .zip(&c.rd)
                        .map(|(e, &v)| (e.id.clone(), Extended(v)))
                        .collect(),
                })
                .collect(),
            extensions: self
                .categories
                .iter()
                .map(|c| (c.name.clone(), ids(&c.extension)))
                .collect(),
        }
    }

    /// Rebuilds a model from a snapshot exactly as stored. Stored tables are
    /// kept even if they disagree with the geometry; see
    /// [`consistency_issues`](Self::consistency_issues).
    pub fn from_snapshot(s: ModelSnapshot<T>) -> Result<Self> {
        let elements: Vec<DomainElement<T>> = s
            .domain
            .into_iter()
            .map(|r| DomainElement {
                id: r.id,
                features: r.features,
                origin: r.origin,
            })
            .collect();
        if !s.synthetic {
            for e in &elements {
                check_vector(&e.features, s.input_dim)?;
            }
        }
        let index: HashMap<&str, usize> = elements
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.as_str(), i))
            .collect();
        let lookup = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| Error::UnknownElement(id.to_string()))
        };
        let links = s
            .stimuli
            .iter()
            .map(|l| {
                Ok(StimulusLink {
                    id: l.id.clone(),
                    label: l.label.clone(),
                    element: lookup(&l.element)?,
                    bmu_unit: l.bmu_unit,
                    bmu_element: lookup(&l.bmu_element)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut categories = Vec::with_capacity(s.categories.len());
        for c in s.categories {
            let mut rd = vec![T::nan(); elements.len()];
            for (id, v) in &c.rd {
                rd[lookup(id)?] = v.0;
            }
            if let Some(e) = rd.iter().position(|v| v.is_nan()) {
                return Err(Error::Input(format!(
                    "category `{}`: missing rd entry for `{}`",
                    c.name, elements[e].id
                )));
            }
            let extension = s
                .extensions
                .get(&c.name)
                .ok_or_else(|| Error::Input(format!("no extension listed for `{}`", c.name)))?
                .iter()
                .map(|id| lookup(id))
                .collect::<Result<ElementSet>>()?;
            let members: Vec<usize> = links
                .iter()
                .enumerate()
                .filter(|(_, l)| l.label == c.name)
                .map(|(i, _)| i)
                .collect();
            categories.push(CategoryTable {
                bmu_elements: members.iter().map(|&m| links[m].bmu_element).collect(),
                members,
                bmu_set: c.bmu_set.into_iter().collect(),
                precision: c.precision,
                rd,
                rd_max: c.rd_max,
                extension,
                name: c.name,
            });
        }
        for l in &links {
            if !categories.iter().any(|c| c.name == l.label) {
                return Err(Error::UnknownCategory(l.label.clone()));
            }
        }
        let domain = Domain {
            input_dim: s.input_dim,
            elements,
            links,
        };
        let model = Self::assemble(domain, categories, s.synthetic)?;
        if model.categories.windows(2).any(|w| w[0].name == w[1].name) {
            return Err(Error::Input("duplicate category name".into()));
        }
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_snapshot()).expect("model serialisation cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: ModelSnapshot<T> =
            serde_json::from_str(text).map_err(|e| Error::Input(format!("model snapshot: {e}")))?;
        Self::from_snapshot(snap)
    }
}

/// Value that may be `+inf`, written as `"inf"` in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(transparent)]
pub struct Extended<T: Scalar>(#[serde(with = "crate::scalar::extended")] pub T);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ElementRecord<T: Scalar> {
    pub id: String,
    pub origin: Origin,
    pub features: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub id: String,
    pub label: String,
    pub element: String,
    pub bmu_unit: usize,
    pub bmu_element: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CategoryRecord<T: Scalar> {
    pub name: String,
    pub bmu_set: Vec<usize>,
    #[serde(with = "crate::scalar::extended::option")]
    pub precision: Option<T>,
    #[serde(with = "crate::scalar::extended::option")]
    pub rd_max: Option<T>,
    pub rd: BTreeMap<String, Extended<T>>,
}

/// On-disk form of a [`SemanticModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ModelSnapshot<T: Scalar> {
    pub input_dim: usize,
    #[serde(default)]
    pub synthetic: bool,
    pub domain: Vec<ElementRecord<T>>,
    pub stimuli: Vec<LinkRecord>,
    pub categories: Vec<CategoryRecord<T>>,
    pub extensions: BTreeMap<String, Vec<String>>,
}
