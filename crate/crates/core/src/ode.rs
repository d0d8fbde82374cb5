//! Classical fourth-order Runge-Kutta stepping over any vector-like state.

/// Minimal linear structure needed by [`rk4_step`].
pub trait OdeState: Clone {
    /// `self + h * other`
    fn axpy(&self, h: f64, other: &Self) -> Self;
}

/// Which RK4 stage an evaluation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Start,
    Mid,
    End,
}

/// One RK4 step of size `h`; `rhs(stage, y)` returns dy/dt evaluated at the
/// start, midpoint or end of the step.
pub fn rk4_step_staged<S, F>(y: &S, h: f64, mut rhs: F) -> S
where
    S: OdeState,
    F: FnMut(Stage, &S) -> S,
{
    let half = 0.5 * h;
    let k1 = rhs(Stage::Start, y);
    let k2 = rhs(Stage::Mid, &y.axpy(half, &k1));
    let k3 = rhs(Stage::Mid, &y.axpy(half, &k2));
    let k4 = rhs(Stage::End, &y.axpy(h, &k3));
    y.axpy(h / 6.0, &k1)
        .axpy(h / 3.0, &k2)
        .axpy(h / 3.0, &k3)
        .axpy(h / 6.0, &k4)
}

/// One RK4 step of size `h` starting at `t`; `rhs(t, y)` returns dy/dt.
pub fn rk4_step<S, F>(y: &S, t: f64, h: f64, mut rhs: F) -> S
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
{
    rk4_step_staged(y, h, |stage, y| match stage {
        Stage::Start => rhs(t, y),
        Stage::Mid => rhs(t + 0.5 * h, y),
        Stage::End => rhs(t + h, y),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Clone, Debug)]
    struct Scalar(f64);

    impl OdeState for Scalar {
        fn axpy(&self, h: f64, other: &Self) -> Self {
            Scalar(self.0 + h * other.0)
        }
    }

    #[test]
    fn exponential_decay_is_fourth_order() {
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let mut y = Scalar(1.0);
            for k in 0..n {
                y = rk4_step(&y, k as f64 * h, h, |_, y| Scalar(-y.0));
            }
            (y.0 - (-1.0f64).exp()).abs()
        };
        let ratio = err(10) / err(20);
        assert!((ratio - 16.0).abs() < 1.5, "ratio {ratio}");
    }
}
