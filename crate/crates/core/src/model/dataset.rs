use crate::ode::ForcingSchedule;

use super::ModelError;

/// Observations of one experimental unit (well, site, patient).
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub id: String,
    pub times: Vec<f64>,
    /// `observations[channel][time]`
    pub observations: Vec<Vec<f64>>,
    pub forcing: ForcingSchedule,
}

impl Group {
    pub fn new(id: impl Into<String>, times: Vec<f64>, observations: Vec<Vec<f64>>) -> Self {
        Self {
            id: id.into(),
            times,
            observations,
            forcing: ForcingSchedule::default(),
        }
    }

    pub fn with_forcing(mut self, forcing: ForcingSchedule) -> Self {
        self.forcing = forcing;
        self
    }

    pub fn n_obs(&self) -> usize {
        self.times.len() * self.observations.len()
    }

    /// Keeps only the time points for which `keep` returns true.
    pub fn filter_times(&self, mut keep: impl FnMut(f64) -> bool) -> Group {
        let idx: Vec<usize> = (0..self.times.len()).filter(|&i| keep(self.times[i])).collect();
        Group {
            id: self.id.clone(),
            times: idx.iter().map(|&i| self.times[i]).collect(),
            observations: self
                .observations
                .iter()
                .map(|ch| idx.iter().map(|&i| ch[i]).collect())
                .collect(),
            forcing: self.forcing.clone(),
        }
    }
}

/// Label of one pointwise observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsLabel {
    pub group: String,
    pub time: f64,
    pub channel: usize,
}

/// Grouped time series. Pointwise quantities are ordered by group, then
/// channel, then time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub groups: Vec<Group>,
}

impl Dataset {
    pub fn new(groups: Vec<Group>) -> Result<Self, ModelError> {
        let d = Self { groups };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut seen = std::collections::HashSet::new();
        for g in &self.groups {
            if !seen.insert(g.id.as_str()) {
                return Err(ModelError::InvalidDataset(format!("duplicate group id {:?}", g.id)));
            }
            if g.times.iter().any(|t| !t.is_finite()) || g.times.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ModelError::InvalidDataset(format!(
                    "times of group {:?} must be finite and strictly increasing",
                    g.id
                )));
            }
            for ch in &g.observations {
                if ch.len() != g.times.len() {
                    return Err(ModelError::InvalidDataset(format!(
                        "group {:?}: {} observations for {} times",
                        g.id,
                        ch.len(),
                        g.times.len()
                    )));
                }
                if ch.iter().any(|v| !v.is_finite()) {
                    return Err(ModelError::InvalidDataset(format!(
                        "group {:?} contains non-finite observations",
                        g.id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn n_obs(&self) -> usize {
        self.groups.iter().map(Group::n_obs).sum()
    }

    /// Channel count shared by every group, `None` when empty or inconsistent.
    pub fn n_channels(&self) -> Option<usize> {
        let first = self.groups.first()?.observations.len();
        self.groups
            .iter()
            .all(|g| g.observations.len() == first)
            .then_some(first)
    }

    pub fn labels(&self) -> Vec<ObsLabel> {
        let mut out = Vec::with_capacity(self.n_obs());
        for g in &self.groups {
            for c in 0..g.observations.len() {
                for &t in &g.times {
                    out.push(ObsLabel {
                        group: g.id.clone(),
                        time: t,
                        channel: c,
                    });
                }
            }
        }
        out
    }

    pub fn group(&self, id: &str) -> Option<&Group> {
        self.groups.iter().find(|g| g.id == id)
    }

    /// Splits every group's time points by `in_train(group, t)`.
    pub fn split(&self, mut in_train: impl FnMut(&Group, f64) -> bool) -> (Dataset, Dataset) {
        let train = self
            .groups
            .iter()
            .map(|g| g.filter_times(|t| in_train(g, t)))
            .collect();
        let test = self
            .groups
            .iter()
            .map(|g| g.filter_times(|t| !in_train(g, t)))
            .collect();
        (Dataset { groups: train }, Dataset { groups: test })
    }
}
