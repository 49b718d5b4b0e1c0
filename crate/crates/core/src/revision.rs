//! Incremental learning as a sequence of revised models.
//!
//! The trace starts from a model where every category is empty (so every
//! `Ci ⊑ Bot` holds). Each step presents one stimulus to the map, adds the
//! stimulus and its BMU to the domain, recomputes the tables of the
//! categories the presentation touched and diffs the satisfied inclusions.
//!
//! The trace domain is identity based: one element per distinct stimulus id
//! and one per unit that has been a BMU at some step, the latter always
//! carrying the unit's current weights. It never shrinks.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::checker::extract_kb;
use crate::concept::{parse_inclusion, Inclusion};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::semantic::{
    compute_table, extension_from, numerator, relative_distance_ratio, Domain, DomainElement,
    ElementSet, Origin, SemanticModel, StimulusLink,
};
use crate::som::{check_vector, Presentation, Schedule, SomMap, Stimulus, TrainConfig};

/// The model before any stimulus: empty domain, every category empty.
pub fn initial_model<T: Scalar>(
    categories: &[String],
    input_dim: usize,
) -> Result<SemanticModel<T>> {
    if categories.is_empty() {
        return Err(Error::Config("at least one category is required".into()));
    }
    SemanticModel::from_domain(
        categories,
        Domain {
            input_dim,
            elements: Vec::new(),
            links: Vec::new(),
        },
    )
}

/// One revision: the stimulus presented and the change in satisfied
/// inclusions.
#[derive(Debug, Clone, PartialEq)]
pub struct RevisionStep<T: Scalar> {
    pub step_index: usize,
    pub stimulus: Stimulus<T>,
    pub bmu_unit: usize,
    pub params: Presentation<T>,
    pub domain_size: usize,
    pub kb_before: BTreeSet<Inclusion>,
    pub kb_after: BTreeSet<Inclusion>,
    pub added: BTreeSet<Inclusion>,
    pub removed: BTreeSet<Inclusion>,
}

impl<T: Scalar> RevisionStep<T> {
    pub fn to_record(&self) -> StepRecord<T> {
        let strings = |s: &BTreeSet<Inclusion>| s.iter().map(ToString::to_string).collect();
        StepRecord {
            step: self.step_index,
            stimulus: self.stimulus.clone(),
            bmu_unit: self.bmu_unit,
            learning_rate: self.params.learning_rate,
            radius: self.params.radius,
            domain_size: self.domain_size,
            kb_before: strings(&self.kb_before),
            kb_after: strings(&self.kb_after),
            added: strings(&self.added),
            removed: strings(&self.removed),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("step serialisation cannot fail")
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        let r: StepRecord<T> =
            serde_json::from_str(line).map_err(|e| Error::Input(format!("trace line: {e}")))?;
        r.into_step()
    }
}

/// Serialised form of a [`RevisionStep`]; inclusions are written in the
/// concept-language syntax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct StepRecord<T: Scalar> {
    pub step: usize,
    pub stimulus: Stimulus<T>,
    pub bmu_unit: usize,
    pub learning_rate: T,
    pub radius: T,
    pub domain_size: usize,
    pub kb_before: Vec<String>,
    pub kb_after: Vec<String>,
    pub added: Vec<String>,
    pub removed: Vec<String>,
}

impl<T: Scalar> StepRecord<T> {
    pub fn into_step(self) -> Result<RevisionStep<T>> {
        let parse = |v: Vec<String>| -> Result<BTreeSet<Inclusion>> {
            v.iter().map(|s| Ok(parse_inclusion(s)?)).collect()
        };
        let step = RevisionStep {
            step_index: self.step,
            stimulus: self.stimulus,
            bmu_unit: self.bmu_unit,
            params: Presentation {
                learning_rate: self.learning_rate,
                radius: self.radius,
            },
            domain_size: self.domain_size,
            kb_before: parse(self.kb_before)?,
            kb_after: parse(self.kb_after)?,
            added: parse(self.added)?,
            removed: parse(self.removed)?,
        };
        if step.added != &step.kb_after - &step.kb_before
            || step.removed != &step.kb_before - &step.kb_after
        {
            return Err(Error::Inconsistent(format!(
                "trace step {}: added/removed do not match the kb diff",
                step.step_index
            )));
        }
        Ok(step)
    }
}

/// Map, current model and its satisfied inclusions.
#[derive(Debug, Clone)]
pub struct RevisionState<T: Scalar> {
    map: SomMap<T>,
    model: SemanticModel<T>,
    kb: BTreeSet<Inclusion>,
    steps: usize,
    /// Stimulus id to its link index.
    seen: HashMap<String, usize>,
    /// Unit index to its domain element.
    unit_elements: BTreeMap<usize, usize>,
}

impl<T: Scalar> RevisionState<T> {
    pub fn new(map: SomMap<T>, categories: &[String]) -> Result<Self> {
        map.validate()?;
        let model = initial_model(categories, map.input_dim)?;
        let kb = extract_kb(&model).satisfied();
        Ok(Self {
            map,
            model,
            kb,
            steps: 0,
            seen: HashMap::new(),
            unit_elements: BTreeMap::new(),
        })
    }

    pub fn map(&self) -> &SomMap<T> {
        &self.map
    }

    pub fn model(&self) -> &SemanticModel<T> {
        &self.model
    }

    pub fn kb(&self) -> &BTreeSet<Inclusion> {
        &self.kb
    }

    pub fn into_parts(self) -> (SomMap<T>, SemanticModel<T>) {
        (self.map, self.model)
    }

    /// Stimuli presented so far, in order of first presentation.
    pub fn seen_stimuli(&self) -> Vec<Stimulus<T>> {
        self.model
            .links()
            .iter()
            .map(|l| Stimulus {
                id: l.id.clone(),
                features: self.model.domain()[l.element].features.clone(),
                label: l.label.clone(),
            })
            .collect()
    }

    /// Recomputes every table of the current domain from scratch.
    pub fn rebuild_from_scratch(&self) -> Result<SemanticModel<T>> {
        let names: Vec<String> = self.model.category_names().map(String::from).collect();
        SemanticModel::from_domain(&names, self.model.domain.clone())
    }

    fn add_element(&mut self, id: String, features: Vec<T>, origin: Origin) -> Result<usize> {
        let e = self.model.push_element(DomainElement {
            id,
            features,
            origin,
        })?;
        for c in &mut self.model.categories {
            c.rd.push(T::infinity());
        }
        Ok(e)
    }

    fn unit_element(&mut self, unit: usize, fresh: &mut ElementSet) -> Result<usize> {
        if let Some(&e) = self.unit_elements.get(&unit) {
            return Ok(e);
        }
        let e = self.add_element(
            format!("u{unit}"),
            self.map.unit(unit).weights.clone(),
            Origin::Bmu,
        )?;
        self.unit_elements.insert(unit, e);
        fresh.insert(e);
        Ok(e)
    }
}

/// Presents `x` once with `params` and revises the model.
pub fn revise<T: Scalar>(
    state: &mut RevisionState<T>,
    x: &Stimulus<T>,
    params: Presentation<T>,
) -> Result<RevisionStep<T>> {
    check_vector(&x.features, state.map.input_dim)?;
    state.model.category_position(&x.label)?;
    if let Some(&link) = state.seen.get(&x.id) {
        let l = &state.model.links()[link];
        if l.label != x.label || state.model.domain()[l.element].features != x.features {
            return Err(Error::Input(format!(
                "stimulus id `{}` was presented before with different content",
                x.id
            )));
        }
    }
    let bmu_unit = state.map.present(&x.features, params)?;

    // elements added by this step, and existing elements whose features moved
    let mut fresh = ElementSet::new();
    let mut moved = ElementSet::new();

    if !state.seen.contains_key(&x.id) {
        let element = state.add_element(x.id.clone(), x.features.clone(), Origin::InputStimulus)?;
        fresh.insert(element);
        state
            .seen
            .insert(x.id.clone(), state.model.domain.links.len());
        state.model.domain.links.push(StimulusLink {
            id: x.id.clone(),
            label: x.label.clone(),
            element,
            bmu_unit: usize::MAX,
            bmu_element: usize::MAX,
        });
    }

    for (&unit, &e) in &state.unit_elements {
        let w = &state.map.unit(unit).weights;
        let el = &mut state.model.domain.elements[e];
        if &el.features != w {
            el.features.clone_from(w);
            moved.insert(e);
        }
    }

    // reassign every seen stimulus to its current BMU
    let mut reassigned: BTreeSet<String> = BTreeSet::new();
    for i in 0..state.model.domain.links.len() {
        let element = state.model.domain.links[i].element;
        let features = state.model.domain.elements[element].features.clone();
        let unit = state.map.find_bmu(&features)?;
        let bmu_element = state.unit_element(unit, &mut fresh)?;
        let link = &mut state.model.domain.links[i];
        if link.bmu_unit != unit || link.bmu_element != bmu_element {
            link.bmu_unit = unit;
            link.bmu_element = bmu_element;
            reassigned.insert(link.label.clone());
        }
    }

    let RevisionState { model, .. } = state;
    let domain = &model.domain;
    let mut tables = std::mem::take(&mut model.categories);
    for table in &mut tables {
        let affected = table.name == x.label
            || reassigned.contains(&table.name)
            || !table.bmu_elements.is_disjoint(&moved);
        if affected {
            let members = domain
                .links
                .iter()
                .enumerate()
                .filter(|(_, l)| l.label == table.name)
                .map(|(i, _)| i)
                .collect();
            *table = compute_table(&table.name, members, domain);
        } else {
            // BMU_C, the precision and rd_max are unchanged; only rows of
            // new or moved elements need values.
            for &e in fresh.iter().chain(&moved) {
                table.rd[e] = match table.precision {
                    Some(p) => relative_distance_ratio(
                        numerator(
                            &domain.elements[e].features,
                            &table.bmu_elements,
                            &domain.elements,
                        ),
                        p,
                    ),
                    None => T::infinity(),
                };
            }
            table.extension = extension_from(&table.rd, table.rd_max);
        }
    }
    model.categories = tables;

    let kb_after = extract_kb(&state.model).satisfied();
    let kb_before = std::mem::replace(&mut state.kb, kb_after.clone());
    let step = RevisionStep {
        step_index: state.steps,
        stimulus: x.clone(),
        bmu_unit,
        params,
        domain_size: state.model.domain_len(),
        added: &kb_after - &kb_before,
        removed: &kb_before - &kb_after,
        kb_before,
        kb_after,
    };
    state.steps += 1;
    Ok(step)
}

/// Output of [`run_trace`].
#[derive(Debug, Clone)]
pub struct Trace<T: Scalar> {
    pub steps: Vec<RevisionStep<T>>,
    pub state: RevisionState<T>,
}

impl<T: Scalar> Trace<T> {
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&s.to_json_line());
            out.push('\n');
        }
        out
    }
}

/// Folds [`revise`] over the presentation sequence that
/// [`SomMap::train`] would use for the same data and config, so the final
/// map equals the batch-trained one. Categories are the distinct labels
/// of `data`.
pub fn run_trace<T: Scalar>(
    map: SomMap<T>,
    data: &[Stimulus<T>],
    cfg: &TrainConfig<T>,
) -> Result<Trace<T>> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Input("cannot trace an empty stream".into()));
    }
    let categories: Vec<String> = data
        .iter()
        .map(|s| s.label.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut state = RevisionState::new(map, &categories)?;
    for s in data {
        check_vector(&s.features, state.map.input_dim)?;
    }
    let mut steps = Vec::with_capacity(data.len() * cfg.epochs);
    let mut schedule = Schedule::new(cfg, data.len()).peekable();
    while let Some(step) = schedule.next() {
        steps.push(revise(&mut state, &data[step.stimulus], step.params)?);
        if schedule.peek().is_none_or(|next| next.epoch != step.epoch) {
            state.map.training_state.epoch += 1;
        }
    }
    Ok(Trace { steps, state })
}
