//! Interaction-order inference from a King's depth profile and
//! interaction-type classification from path directions.

use serde::{Deserialize, Serialize};

/// Orders a King takes part in: order 1 if the depth-1 importance exceeds
/// `tau`, order `d >= 2` if the importance jumps by more than `tau` from
/// depth `d - 1` to `d`. Ascending.
pub fn infer_orders(profile: &[f64], tau: f64) -> Vec<usize> {
    let mut orders = Vec::new();
    if let Some(&first) = profile.first() {
        if first > tau {
            orders.push(1);
        }
    }
    for d in 2..=profile.len() {
        if profile[d - 1] - profile[d - 2] > tau {
            orders.push(d);
        }
    }
    orders
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionKind {
    /// At least one member also has a main effect.
    Accompanied,
    /// Every member leads a path with positive importance.
    Synergistic,
    /// Only some members lead; the rest are nested behind them.
    Hierarchical,
}

impl InteractionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InteractionKind::Accompanied => "accompanied",
            InteractionKind::Synergistic => "synergistic",
            InteractionKind::Hierarchical => "hierarchical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypedInteraction {
    /// Members, ascending.
    pub vars: Vec<usize>,
    pub order: usize,
    pub kind: InteractionKind,
    /// Leading members by descending importance; empty unless hierarchical.
    pub dominant: Vec<usize>,
    /// Set when no direction carried importance and the kind is a default.
    pub low_confidence: bool,
    /// Per member (aligned with `vars`): best average importance of a
    /// recovered path of this set that starts with the member.
    pub direction_pvims: Vec<Option<f64>>,
    /// Per member: depth-1 King's importance, if the member was a King.
    pub main_pvims: Vec<Option<f64>>,
    pub tau_main: f64,
    pub tau_dir: f64,
}

/// Types one candidate interaction. `vars`, `direction_pvims` and
/// `main_pvims` are aligned member by member.
pub fn classify_interaction(
    vars: &[usize],
    direction_pvims: &[Option<f64>],
    main_pvims: &[Option<f64>],
    tau_main: f64,
    tau_dir: f64,
) -> TypedInteraction {
    assert_eq!(vars.len(), direction_pvims.len());
    assert_eq!(vars.len(), main_pvims.len());

    let mut kind = InteractionKind::Synergistic;
    let mut dominant = Vec::new();
    let mut low_confidence = false;

    if main_pvims.iter().flatten().any(|&m| m > tau_main) {
        kind = InteractionKind::Accompanied;
    } else {
        let mut leaders: Vec<(usize, f64)> = vars
            .iter()
            .zip(direction_pvims)
            .filter_map(|(&v, d)| d.filter(|&a| a > tau_dir).map(|a| (v, a)))
            .collect();
        if leaders.is_empty() {
            low_confidence = true;
        } else if leaders.len() < vars.len() {
            kind = InteractionKind::Hierarchical;
            leaders.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            dominant = leaders.into_iter().map(|(v, _)| v).collect();
        }
    }

    TypedInteraction {
        vars: vars.to_vec(),
        order: vars.len(),
        kind,
        dominant,
        low_confidence,
        direction_pvims: direction_pvims.to_vec(),
        main_pvims: main_pvims.to_vec(),
        tau_main,
        tau_dir,
    }
}
