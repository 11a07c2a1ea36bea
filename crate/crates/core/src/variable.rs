//! Kinematic variable identifiers and the three variable-set modes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{GaitError, Result};

/// Joint/plane of a kinematic variable, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Joint {
    PelvicTilt,
    PelvicObliquity,
    PelvicRotation,
    HipFlexion,
    HipAbduction,
    HipRotation,
    KneeFlexion,
    AnkleDorsiflexion,
    FootRotation,
}

impl Joint {
    pub const ALL: [Joint; 9] = [
        Joint::PelvicTilt,
        Joint::PelvicObliquity,
        Joint::PelvicRotation,
        Joint::HipFlexion,
        Joint::HipAbduction,
        Joint::HipRotation,
        Joint::KneeFlexion,
        Joint::AnkleDorsiflexion,
        Joint::FootRotation,
    ];

    pub fn is_pelvis(self) -> bool {
        matches!(
            self,
            Joint::PelvicTilt | Joint::PelvicObliquity | Joint::PelvicRotation
        )
    }

    /// Column token used by the wide CSV format.
    pub fn token(self) -> &'static str {
        match self {
            Joint::PelvicTilt => "pelvic_tilt",
            Joint::PelvicObliquity => "pelvic_obliquity",
            Joint::PelvicRotation => "pelvic_rotation",
            Joint::HipFlexion => "hip_flexion",
            Joint::HipAbduction => "hip_abduction",
            Joint::HipRotation => "hip_rotation",
            Joint::KneeFlexion => "knee_flexion",
            Joint::AnkleDorsiflexion => "ankle_dorsiflexion",
            Joint::FootRotation => "foot_rotation",
        }
    }

    /// Human-readable label, as printed on a Movement Analysis Profile.
    pub fn label(self) -> &'static str {
        match self {
            Joint::PelvicTilt => "pelvic tilt",
            Joint::PelvicObliquity => "pelvic obliquity",
            Joint::PelvicRotation => "pelvic rotation",
            Joint::HipFlexion => "hip flexion/extension",
            Joint::HipAbduction => "hip abduction/adduction",
            Joint::HipRotation => "hip rotation",
            Joint::KneeFlexion => "knee flexion/extension",
            Joint::AnkleDorsiflexion => "ankle dorsiflexion/plantarflexion",
            Joint::FootRotation => "foot int/external rotation",
        }
    }
}

impl FromStr for Joint {
    type Err = GaitError;

    fn from_str(s: &str) -> Result<Self> {
        Joint::ALL
            .iter()
            .copied()
            .find(|j| j.token() == s)
            .ok_or_else(|| GaitError::parse(format!("unknown variable `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn letter(self) -> &'static str {
        match self {
            Side::Left => "L",
            Side::Right => "R",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

impl FromStr for Side {
    type Err = GaitError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L" | "l" | "left" | "Left" => Ok(Side::Left),
            "R" | "r" | "right" | "Right" => Ok(Side::Right),
            other => Err(GaitError::parse(format!("unknown side `{other}`"))),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One of the 18 (joint/plane, side) kinematic variables.
///
/// Ordering is canonical: the left block precedes the right block, and within
/// a block joints follow [`Joint::ALL`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId {
    pub side: Side,
    pub joint: Joint,
}

impl VariableId {
    pub const fn new(side: Side, joint: Joint) -> Self {
        VariableId { side, joint }
    }

    /// All 18 variables in canonical order.
    pub fn all() -> Vec<VariableId> {
        Side::BOTH
            .iter()
            .flat_map(|&side| Joint::ALL.iter().map(move |&joint| VariableId { side, joint }))
            .collect()
    }

    /// e.g. `LHS ankle dorsiflexion/plantarflexion`.
    pub fn label(&self) -> String {
        let prefix = match self.side {
            Side::Left => "LHS",
            Side::Right => "RHS",
        };
        format!("{prefix} {}", self.joint.label())
    }
}

/// Compact key form, `L_knee_flexion`, used for JSON keys and report columns.
impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.side.letter(), self.joint.token())
    }
}

impl FromStr for VariableId {
    type Err = GaitError;

    fn from_str(s: &str) -> Result<Self> {
        let (side, joint) = s
            .split_once('_')
            .ok_or_else(|| GaitError::parse(format!("bad variable key `{s}`")))?;
        Ok(VariableId {
            side: side.parse()?,
            joint: joint.parse()?,
        })
    }
}

impl Serialize for VariableId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VariableId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SetMode {
    /// Nine left-side and six right-side variables, pelvis from one side.
    Combined15 {
        pelvis_side: Side,
    },
    /// The nine variables of one leg.
    Leg9 {
        side: Side,
    },
    Single {
        variable: VariableId,
    },
}

/// An ordered subset of the 18 variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableSet {
    mode: SetMode,
    members: Vec<VariableId>,
}

impl VariableSet {
    pub fn combined15(pelvis_side: Side) -> Self {
        let members = VariableId::all()
            .into_iter()
            .filter(|v| !v.joint.is_pelvis() || v.side == pelvis_side)
            .collect();
        VariableSet {
            mode: SetMode::Combined15 { pelvis_side },
            members,
        }
    }

    pub fn leg9(side: Side) -> Self {
        let members = Joint::ALL.iter().map(|&j| VariableId::new(side, j)).collect();
        VariableSet {
            mode: SetMode::Leg9 { side },
            members,
        }
    }

    pub fn single(variable: VariableId) -> Self {
        VariableSet {
            mode: SetMode::Single { variable },
            members: vec![variable],
        }
    }

    pub fn from_mode(mode: SetMode) -> Self {
        match mode {
            SetMode::Combined15 { pelvis_side } => Self::combined15(pelvis_side),
            SetMode::Leg9 { side } => Self::leg9(side),
            SetMode::Single { variable } => Self::single(variable),
        }
    }

    pub fn mode(&self) -> SetMode {
        self.mode
    }

    pub fn members(&self) -> &[VariableId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: VariableId) -> bool {
        self.members.contains(&v)
    }
}
