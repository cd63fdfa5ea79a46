//! JSON document format: loading (with full validation), saving, the CRR
//! generator shorthand and recombination of equal-price nodes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::lattice::RawNode;
use super::{
    prices_equal, Lattice, ModelError, PayoffSpec, PriorFamily, Utility1d, UtilityProfile,
};

/// A validated model: lattice plus whatever optional blocks the document
/// carried.  Operations that need a missing block fail with a validation
/// error at call time.
#[derive(Debug, Clone)]
pub struct Model {
    pub lattice: Lattice,
    pub payoff: Option<PayoffSpec>,
    pub priors: Option<PriorFamily>,
    pub utility: Option<UtilityProfile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: String,
    time: u32,
    price: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    successors: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PayoffDoc {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<serde_json::Map<String, serde_json::Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UtilityDoc {
    family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<serde_json::Value>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Doc {
    // generator shorthand
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<String>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    t: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s0: Option<f64>,
    /// generator-only: attach this prior list to every non-terminal node
    #[serde(default, skip_serializing_if = "Option::is_none")]
    priors_each: Option<Vec<Vec<f64>>>,

    // explicit form
    #[serde(default, skip_serializing_if = "Option::is_none")]
    horizon: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    root_price: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nodes: Option<Vec<NodeDoc>>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    priors_u: Option<BTreeMap<String, Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    payoff: Option<PayoffDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    utility: Option<UtilityDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    recombine: Option<bool>,
}

/// Parse and validate a model document.
pub fn load_model(json: &str) -> Result<Model, ModelError> {
    let doc: Doc =
        serde_json::from_str(json).map_err(|e| ModelError::Schema(e.to_string()))?;

    let (horizon, dim, root_price, mut raw, mut priors_map) = if let Some(gen) = &doc.generator {
        if doc.nodes.is_some() || doc.horizon.is_some() {
            return Err(ModelError::Generator(
                "generator form must not also carry explicit nodes".into(),
            ));
        }
        if gen != "crr" {
            return Err(ModelError::Generator(format!("unknown generator {gen}")));
        }
        let t = doc.t.ok_or_else(|| miss("T"))?;
        let u = doc.u.ok_or_else(|| miss("u"))?;
        let d = doc.d.ok_or_else(|| miss("d"))?;
        let s0 = doc.s0.ok_or_else(|| miss("s0"))?;
        if !(u.is_finite() && d.is_finite() && u > 0.0 && d > 0.0) {
            return Err(ModelError::Generator(format!(
                "factors must be positive and finite, got u={u}, d={d}"
            )));
        }
        if u == d {
            return Err(ModelError::Generator("factors u and d must differ".into()));
        }
        if !(s0.is_finite() && s0 >= 0.0) {
            return Err(ModelError::Generator(format!(
                "initial price must be non-negative, got {s0}"
            )));
        }
        let raw = crr_nodes(t, u, d, s0)?;
        let mut priors_map = None;
        if let Some(each) = &doc.priors_each {
            let mut map = BTreeMap::new();
            for n in &raw {
                if !n.successors.is_empty() {
                    map.insert(n.id.clone(), each.clone());
                }
            }
            priors_map = Some(map);
        }
        (t, 1usize, vec![s0], raw, priors_map)
    } else {
        if doc.priors_each.is_some() {
            return Err(ModelError::Schema(
                "priors_each is only valid in generator form".into(),
            ));
        }
        let horizon = doc.horizon.ok_or_else(|| miss("horizon"))?;
        let dim = doc.dimension.ok_or_else(|| miss("dimension"))?;
        let root_price = doc.root_price.clone().ok_or_else(|| miss("root_price"))?;
        let nodes = doc.nodes.as_ref().ok_or_else(|| miss("nodes"))?;
        let raw = nodes
            .iter()
            .map(|n| RawNode {
                id: n.id.clone(),
                time: n.time,
                price: n.price.clone(),
                successors: n.successors.clone(),
            })
            .collect();
        (horizon, dim, root_price, raw, doc.priors_u.clone())
    };

    let payoff = doc.payoff.as_ref().map(parse_payoff).transpose()?;
    let recombine = doc.recombine.unwrap_or(false);

    if recombine {
        if priors_map.is_some() {
            return Err(ModelError::RecombineWithPriors);
        }
        if let Some(p) = &payoff {
            if !p.is_terminal_price_function() {
                return Err(ModelError::RecombineNeedsPricePayoff);
            }
        }
        raw = recombine_nodes(raw);
    } else {
        merge_duplicate_leaf_siblings(&mut raw, payoff.as_ref(), &mut priors_map)?;
    }

    let lattice = Lattice::assemble(horizon, dim, &root_price, raw, recombine)?;

    if let Some(p) = &payoff {
        p.validate(&lattice)?;
    }
    let priors = priors_map
        .as_ref()
        .map(|m| PriorFamily::from_map(&lattice, m))
        .transpose()?;
    let utility = doc
        .utility
        .as_ref()
        .map(|u| parse_utility(u, horizon))
        .transpose()?;

    Ok(Model {
        lattice,
        payoff,
        priors,
        utility,
    })
}

/// Serialise a model back to the explicit document form (canonical field
/// order, nodes in storage order).  Loading the output reproduces the model.
pub fn save_model(model: &Model) -> String {
    let nodes: Vec<NodeDoc> = model
        .lattice
        .nodes()
        .iter()
        .map(|n| NodeDoc {
            id: n.id.clone(),
            time: n.time,
            price: n.price.clone(),
            successors: n
                .successors
                .iter()
                .map(|&j| model.lattice.node(j).id.clone())
                .collect(),
        })
        .collect();
    let doc = Doc {
        horizon: Some(model.lattice.horizon()),
        dimension: Some(model.lattice.dim()),
        root_price: Some(model.lattice.node(model.lattice.root()).price.clone()),
        nodes: Some(nodes),
        priors_u: model.priors.as_ref().map(|p| p.to_map(&model.lattice)),
        payoff: model.payoff.as_ref().map(payoff_doc),
        utility: model.utility.as_ref().map(utility_doc),
        recombine: if model.lattice.is_tree() {
            None
        } else {
            Some(true)
        },
        ..Doc::default()
    };
    serde_json::to_string_pretty(&doc).expect("document serialisation cannot fail")
}

fn miss(field: &str) -> ModelError {
    ModelError::Schema(format!("missing required field {field}"))
}

/// Non-recombining binomial tree: ids are the root id `s` followed by the
/// letters of the up/down path.
fn crr_nodes(t: u32, u: f64, d: f64, s0: f64) -> Result<Vec<RawNode>, ModelError> {
    if t < 1 {
        return Err(ModelError::HorizonZero);
    }
    let mut raw = Vec::new();
    let mut frontier = vec![("s".to_string(), s0)];
    for time in 0..=t {
        let mut next = Vec::new();
        for (id, price) in &frontier {
            let successors = if time < t {
                let up = format!("{id}u");
                let dn = format!("{id}d");
                next.push((up.clone(), price * u));
                next.push((dn.clone(), price * d));
                vec![up, dn]
            } else {
                vec![]
            };
            raw.push(RawNode {
                id: id.clone(),
                time,
                price: vec![*price],
                successors,
            });
        }
        frontier = next;
    }
    Ok(raw)
}

/// Merge all nodes that share (time, price) into one, preserving the
/// first-seen id per class; successor lists are rewritten and deduplicated.
fn recombine_nodes(raw: Vec<RawNode>) -> Vec<RawNode> {
    // representative id per node id
    let mut rep: BTreeMap<String, String> = BTreeMap::new();
    let mut keep: Vec<RawNode> = Vec::new();
    let mut max_time = 0;
    for n in &raw {
        max_time = max_time.max(n.time);
    }
    for time in 0..=max_time {
        for n in raw.iter().filter(|n| n.time == time) {
            let found = keep
                .iter()
                .find(|k| k.time == time && prices_equal(&k.price, &n.price))
                .map(|k| k.id.clone());
            match found {
                Some(canon) => {
                    rep.insert(n.id.clone(), canon);
                }
                None => {
                    rep.insert(n.id.clone(), n.id.clone());
                    keep.push(n.clone());
                }
            }
        }
    }
    // Rewire: merge successor lists of all members of a class.
    let mut merged: Vec<RawNode> = Vec::new();
    for k in keep {
        let mut successors: Vec<String> = Vec::new();
        for n in raw.iter().filter(|n| rep[&n.id] == k.id) {
            for s in &n.successors {
                let r = rep[s].clone();
                if !successors.contains(&r) {
                    successors.push(r);
                }
            }
        }
        merged.push(RawNode {
            id: k.id,
            time: k.time,
            price: k.price,
            successors,
        });
    }
    merged
}

/// Without the recombine flag, sibling successors with equal prices are
/// merged only in the unambiguous case: all of them terminal and the payoff
/// (if any) unable to tell them apart.  Anything else is an error.
fn merge_duplicate_leaf_siblings(
    raw: &mut Vec<RawNode>,
    payoff: Option<&PayoffSpec>,
    priors: &mut Option<BTreeMap<String, Vec<Vec<f64>>>>,
) -> Result<(), ModelError> {
    let by_id: BTreeMap<String, (u32, Vec<f64>, bool)> = raw
        .iter()
        .map(|n| {
            (
                n.id.clone(),
                (n.time, n.price.clone(), n.successors.is_empty()),
            )
        })
        .collect();
    let mut drop: Vec<String> = Vec::new();
    for n in raw.iter_mut() {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (pos, sid) in n.successors.iter().enumerate() {
            let Some((_, price, _)) = by_id.get(sid) else {
                continue; // dangling: reported by assembly
            };
            let hit = groups.iter_mut().find(|g| {
                let first = &n.successors[g[0]];
                prices_equal(&by_id[first].1, price)
            });
            match hit {
                Some(g) => g.push(pos),
                None => groups.push(vec![pos]),
            }
        }
        if groups.iter().all(|g| g.len() == 1) {
            continue;
        }
        for g in groups.iter().filter(|g| g.len() > 1) {
            let all_terminal = g.iter().all(|&p| by_id[&n.successors[p]].2);
            let payoff_ok = match payoff {
                None => true,
                Some(p) if p.is_terminal_price_function() => true,
                Some(PayoffSpec::Table(values)) => {
                    let vals: Vec<Option<&f64>> = g
                        .iter()
                        .map(|&p| values.get(&n.successors[p]))
                        .collect();
                    vals.windows(2).all(|w| match (w[0], w[1]) {
                        (Some(a), Some(b)) => a == b,
                        _ => false,
                    })
                }
                Some(_) => false,
            };
            if !(all_terminal && payoff_ok) {
                return Err(ModelError::AmbiguousDuplicate { node: n.id.clone() });
            }
        }
        // merge: keep the first successor of each group, fold prior mass
        let kept: Vec<usize> = groups.iter().map(|g| g[0]).collect();
        if let Some(pmap) = priors.as_mut() {
            if let Some(list) = pmap.get_mut(&n.id) {
                for vec in list.iter_mut() {
                    if vec.len() != n.successors.len() {
                        continue; // length mismatch: reported by prior validation
                    }
                    let folded: Vec<f64> = groups
                        .iter()
                        .map(|g| g.iter().map(|&p| vec[p]).sum())
                        .collect();
                    *vec = folded;
                }
            }
        }
        for g in groups.iter().filter(|g| g.len() > 1) {
            for &p in &g[1..] {
                drop.push(n.successors[p].clone());
            }
        }
        n.successors = kept
            .into_iter()
            .map(|p| n.successors[p].clone())
            .collect();
    }
    raw.retain(|n| !drop.contains(&n.id));
    Ok(())
}

fn parse_payoff(doc: &PayoffDoc) -> Result<PayoffSpec, ModelError> {
    let params = doc.params.clone().unwrap_or_default();
    let num = |key: &str| -> Result<f64, ModelError> {
        params
            .get(key)
            .and_then(|v| v.as_f64())
            .ok_or_else(|| ModelError::Schema(format!("payoff {} needs numeric {key}", doc.kind)))
    };
    match doc.kind.as_str() {
        "call" => Ok(PayoffSpec::Call { strike: num("strike")? }),
        "put" => Ok(PayoffSpec::Put { strike: num("strike")? }),
        "straddle" => Ok(PayoffSpec::Straddle { strike: num("strike")? }),
        "linear" => {
            let weights = params
                .get("weights")
                .and_then(|v| v.as_array())
                .map(|a| a.iter().map(|x| x.as_f64().unwrap_or(f64::NAN)).collect())
                .ok_or_else(|| {
                    ModelError::Schema("payoff linear needs a weights array".into())
                })?;
            let offset = params.get("offset").and_then(|v| v.as_f64()).unwrap_or(0.0);
            Ok(PayoffSpec::Linear { weights, offset })
        }
        "min" => Ok(PayoffSpec::MinCoord),
        "max" => Ok(PayoffSpec::MaxCoord),
        "running_min" => Ok(PayoffSpec::RunningMin),
        "table" => {
            let values = doc
                .values
                .clone()
                .ok_or_else(|| ModelError::Schema("payoff table needs values".into()))?;
            Ok(PayoffSpec::Table(values))
        }
        other => Err(ModelError::Schema(format!("unknown payoff kind {other}"))),
    }
}

fn payoff_doc(p: &PayoffSpec) -> PayoffDoc {
    let mut params = serde_json::Map::new();
    let (kind, values) = match p {
        PayoffSpec::Call { strike } => {
            params.insert("strike".into(), json_num(*strike));
            ("call", None)
        }
        PayoffSpec::Put { strike } => {
            params.insert("strike".into(), json_num(*strike));
            ("put", None)
        }
        PayoffSpec::Straddle { strike } => {
            params.insert("strike".into(), json_num(*strike));
            ("straddle", None)
        }
        PayoffSpec::Linear { weights, offset } => {
            params.insert(
                "weights".into(),
                serde_json::Value::Array(weights.iter().map(|w| json_num(*w)).collect()),
            );
            params.insert("offset".into(), json_num(*offset));
            ("linear", None)
        }
        PayoffSpec::MinCoord => ("min", None),
        PayoffSpec::MaxCoord => ("max", None),
        PayoffSpec::RunningMin => ("running_min", None),
        PayoffSpec::Table(values) => ("table", Some(values.clone())),
    };
    PayoffDoc {
        kind: kind.into(),
        params: if params.is_empty() {
            None
        } else {
            Some(params)
        },
        values,
    }
}

fn json_num(v: f64) -> serde_json::Value {
    serde_json::Number::from_f64(v)
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}

fn parse_utility(doc: &UtilityDoc, horizon: u32) -> Result<UtilityProfile, ModelError> {
    if doc.family == "per_time" {
        let params = doc
            .params
            .as_ref()
            .and_then(|v| v.as_object())
            .ok_or_else(|| ModelError::Utility("per_time utility needs a params map".into()))?;
        let default = params
            .get("default")
            .map(|v| parse_utility_one(&value_to_doc(v)?))
            .transpose()?;
        let mut seq = Vec::with_capacity(horizon as usize);
        for t in 1..=horizon {
            let key = t.to_string();
            let u = match params.get(&key) {
                Some(v) => parse_utility_one(&value_to_doc(v)?)?,
                None => default.clone().ok_or_else(|| {
                    ModelError::Utility(format!(
                        "per_time utility missing date {t} and no default"
                    ))
                })?,
            };
            seq.push(u);
        }
        UtilityProfile::from_sequence(seq)
    } else {
        Ok(UtilityProfile::uniform(parse_utility_one(doc)?, horizon))
    }
}

fn value_to_doc(v: &serde_json::Value) -> Result<UtilityDoc, ModelError> {
    serde_json::from_value(v.clone()).map_err(|e| ModelError::Utility(e.to_string()))
}

fn parse_utility_one(doc: &UtilityDoc) -> Result<Utility1d, ModelError> {
    match doc.family.as_str() {
        "exponential" => {
            let gamma = doc
                .params
                .as_ref()
                .and_then(|v| v.get("gamma"))
                .and_then(|v| v.as_f64())
                .ok_or_else(|| {
                    ModelError::Utility("exponential utility needs numeric gamma".into())
                })?;
            Utility1d::exponential(gamma)
        }
        "power_bounded" => Ok(Utility1d::PowerBounded),
        "piecewise" => {
            let pts = doc
                .params
                .as_ref()
                .and_then(|v| v.get("points"))
                .and_then(|v| v.as_array())
                .ok_or_else(|| {
                    ModelError::Utility("piecewise utility needs a points array".into())
                })?;
            let mut points = Vec::with_capacity(pts.len());
            for p in pts {
                let pair = p.as_array().filter(|a| a.len() == 2).ok_or_else(|| {
                    ModelError::Utility("piecewise points must be [x, value] pairs".into())
                })?;
                let x = pair[0].as_f64().ok_or_else(|| {
                    ModelError::Utility("piecewise point x must be numeric".into())
                })?;
                let v = pair[1].as_f64().ok_or_else(|| {
                    ModelError::Utility("piecewise point value must be numeric".into())
                })?;
                points.push((x, v));
            }
            Utility1d::piecewise(&points)
        }
        other => Err(ModelError::Utility(format!("unknown utility family {other}"))),
    }
}

fn utility_doc(profile: &UtilityProfile) -> UtilityDoc {
    let one = |u: &Utility1d| -> UtilityDoc {
        match u {
            Utility1d::Exponential { gamma } => UtilityDoc {
                family: "exponential".into(),
                params: Some(serde_json::json!({ "gamma": gamma })),
            },
            Utility1d::PowerBounded => UtilityDoc {
                family: "power_bounded".into(),
                params: None,
            },
            Utility1d::Piecewise(pw) => {
                let (xs, vs) = pw.breakpoints();
                let points: Vec<serde_json::Value> = xs
                    .iter()
                    .zip(vs.iter())
                    .map(|(x, v)| serde_json::json!([x, v]))
                    .collect();
                UtilityDoc {
                    family: "piecewise".into(),
                    params: Some(serde_json::json!({ "points": points })),
                }
            }
        }
    };
    let first = profile.at(1);
    let homogeneous = (1..=profile.horizon()).all(|t| profile.at(t) == first);
    if homogeneous {
        one(first)
    } else {
        let mut map = serde_json::Map::new();
        for t in 1..=profile.horizon() {
            let d = one(profile.at(t));
            map.insert(
                t.to_string(),
                serde_json::json!({ "family": d.family, "params": d.params }),
            );
        }
        UtilityDoc {
            family: "per_time".into(),
            params: Some(serde_json::Value::Object(map)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crr_generator_counts_nodes() {
        let m = load_model(
            r#"{"generator":"crr","T":3,"u":1.2,"d":0.8,"s0":100.0,
                "payoff":{"kind":"call","params":{"strike":100.0}}}"#,
        )
        .unwrap();
        assert_eq!(m.lattice.len(), 15);
        for t in 0..=3 {
            assert_eq!(m.lattice.at_time(t).len(), 1usize << t);
        }
        assert_eq!(m.lattice.leaves().len(), 8);
    }

    #[test]
    fn crr_generator_with_recombination() {
        let m = load_model(
            r#"{"generator":"crr","T":3,"u":1.2,"d":0.8,"s0":100.0,"recombine":true,
                "payoff":{"kind":"call","params":{"strike":100.0}}}"#,
        )
        .unwrap();
        assert_eq!(m.lattice.len(), 1 + 2 + 3 + 4);
        assert!(!m.lattice.is_tree());
    }

    #[test]
    fn recombination_rejects_path_payoffs() {
        let err = load_model(
            r#"{"generator":"crr","T":2,"u":1.2,"d":0.8,"s0":100.0,"recombine":true,
                "payoff":{"kind":"running_min"}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::RecombineNeedsPricePayoff));
    }

    #[test]
    fn zero_horizon_is_rejected_with_message() {
        let err = load_model(r#"{"generator":"crr","T":0,"u":1.2,"d":0.8,"s0":100.0}"#)
            .unwrap_err();
        assert_eq!(err.to_string(), "horizon must be ≥ 1");
    }

    #[test]
    fn explicit_document_round_trips() {
        let json = r#"{
            "horizon": 1, "dimension": 2, "root_price": [1.0, 1.0],
            "nodes": [
              {"id":"r","time":0,"price":[1.0,1.0],"successors":["a","b","c","e"]},
              {"id":"a","time":1,"price":[2.0,0.0]},
              {"id":"b","time":1,"price":[0.0,2.0]},
              {"id":"c","time":1,"price":[0.0,0.0]},
              {"id":"e","time":1,"price":[2.0,2.0]}
            ],
            "priors_u": {"r": [[0.25,0.25,0.25,0.25],[0.0,0.0,0.5,0.5]]},
            "payoff": {"kind":"min"},
            "utility": {"family":"exponential","params":{"gamma":1.0}}
        }"#;
        let m1 = load_model(json).unwrap();
        let s1 = save_model(&m1);
        let m2 = load_model(&s1).unwrap();
        let s2 = save_model(&m2);
        assert_eq!(s1, s2);
        assert_eq!(m1.lattice, m2.lattice);
        assert_eq!(m1.priors, m2.priors);
        assert_eq!(m1.payoff, m2.payoff);
        assert_eq!(m1.utility, m2.utility);
    }

    #[test]
    fn duplicate_terminal_siblings_merge_and_fold_priors() {
        let json = r#"{
            "horizon": 1, "dimension": 1, "root_price": [2.0],
            "nodes": [
              {"id":"r","time":0,"price":[2.0],"successors":["a","b","c"]},
              {"id":"a","time":1,"price":[4.0]},
              {"id":"b","time":1,"price":[4.0]},
              {"id":"c","time":1,"price":[1.0]}
            ],
            "priors_u": {"r": [[0.3,0.3,0.4]]},
            "payoff": {"kind":"call","params":{"strike":2.0}}
        }"#;
        let m = load_model(json).unwrap();
        assert_eq!(m.lattice.len(), 3);
        let fam = m.priors.unwrap();
        let prior = &fam.at(m.lattice.root())[0];
        assert_eq!(prior.len(), 2);
        assert!((prior[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn ambiguous_duplicates_are_rejected() {
        let json = r#"{
            "horizon": 1, "dimension": 1, "root_price": [2.0],
            "nodes": [
              {"id":"r","time":0,"price":[2.0],"successors":["a","b"]},
              {"id":"a","time":1,"price":[4.0]},
              {"id":"b","time":1,"price":[4.0]}
            ],
            "payoff": {"kind":"table","values":{"a":1.0,"b":2.0}}
        }"#;
        let err = load_model(json).unwrap_err();
        assert!(matches!(err, ModelError::AmbiguousDuplicate { .. }));
    }

    #[test]
    fn unknown_fields_are_schema_violations() {
        let err = load_model(r#"{"horizn": 2}"#).unwrap_err();
        assert!(matches!(err, ModelError::Schema(_)));
    }

    #[test]
    fn per_time_utility_parses() {
        let json = r#"{
            "generator":"crr","T":2,"u":1.3,"d":0.7,"s0":1.0,
            "utility":{"family":"per_time","params":{
                "1":{"family":"exponential","params":{"gamma":2.0}},
                "default":{"family":"power_bounded"}
            }}
        }"#;
        let m = load_model(json).unwrap();
        let profile = m.utility.unwrap();
        assert_eq!(
            profile.at(1),
            &Utility1d::Exponential { gamma: 2.0 }
        );
        assert_eq!(profile.at(2), &Utility1d::PowerBounded);
    }
}
