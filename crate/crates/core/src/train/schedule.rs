/// Multiplies the learning rate by `factor` once the loss has failed to
/// improve on its best value for `patience` consecutive updates.
#[derive(Debug, Clone, PartialEq)]
pub struct Plateau {
    pub factor: f64,
    pub patience: u32,
    pub best: f64,
    pub bad_steps: u32,
}

impl Default for Plateau {
    fn default() -> Self {
        Plateau::new(0.98, 100)
    }
}

impl Plateau {
    pub fn new(factor: f64, patience: u32) -> Self {
        Plateau {
            factor,
            patience,
            best: f64::INFINITY,
            bad_steps: 0,
        }
    }

    /// Records `loss` and returns the possibly reduced learning rate.
    pub fn step(&mut self, loss: f64, lr: f64) -> f64 {
        if loss < self.best {
            self.best = loss;
            self.bad_steps = 0;
            return lr;
        }
        self.bad_steps += 1;
        if self.bad_steps >= self.patience {
            self.bad_steps = 0;
            lr * self.factor
        } else {
            lr
        }
    }
}
