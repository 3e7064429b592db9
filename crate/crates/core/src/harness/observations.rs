use crate::benchfns::Sense;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Query in raw coordinates.
    pub x: Vec<f64>,
    /// Flat grid index for on-grid queries.
    pub flat: Option<usize>,
    /// Raw objective value.
    pub y: f64,
}

/// Ordered evaluation history of one run.
#[derive(Debug, Clone)]
pub struct ObservationSet {
    records: Vec<Observation>,
    n_init: usize,
    budget: usize,
    sense: Sense,
}

impl ObservationSet {
    pub fn new(n_init: usize, budget: usize, sense: Sense) -> Self {
        ObservationSet { records: Vec::with_capacity(n_init + budget), n_init, budget, sense }
    }

    pub fn push(&mut self, obs: Observation) -> Result<()> {
        if self.records.len() >= self.n_init + self.budget {
            return Err(Error::invalid("observation budget exhausted"));
        }
        if let Some(f) = obs.flat {
            if self.records.iter().any(|r| r.flat == Some(f)) {
                return Err(Error::invalid(format!("grid entry {f} observed twice")));
            }
        }
        self.records.push(obs);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_init(&self) -> usize {
        self.n_init
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn records(&self) -> &[Observation] {
        &self.records
    }

    /// Values oriented so that larger is better.
    pub fn targets(&self) -> Vec<f64> {
        let s = self.sense.sign();
        self.records.iter().map(|r| s * r.y).collect()
    }

    pub fn observed_flats(&self) -> Vec<usize> {
        self.records.iter().filter_map(|r| r.flat).collect()
    }

    /// Best raw value so far.
    pub fn best(&self) -> Option<f64> {
        self.records.iter().map(|r| r.y).reduce(|a, b| if self.sense.better(b, a) { b } else { a })
    }
}
