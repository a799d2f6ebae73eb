//! Pseudo-arclength continuation of `A u = λ W e^u` in `(u, log λ)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::{Discretization, GridSpec};
use super::newton::{NewtonOptions, RefinedLu, Solver};
use crate::green::DomainSpec;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchState<T> {
    pub lambda: T,
    pub u_max: T,
    /// Arclength from the first state.
    pub s: T,
    /// `λ ∫_Ω e^u`.
    pub mass: T,
    /// Grid values; empty once the profile has been dropped.
    #[serde(default = "Vec::new", skip_serializing_if = "Vec::is_empty")]
    pub u: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fold<T> {
    pub lambda: T,
    pub u_max: T,
    /// Index of the last state before `λ` started decreasing.
    pub index: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolutionBranch<T> {
    pub states: Vec<BranchState<T>>,
    pub fold: Option<Fold<T>>,
}

impl<T: Scalar> SolutionBranch<T> {
    pub fn last(&self) -> Option<&BranchState<T>> {
        self.states.last()
    }

    /// Writes `lambda,u_max,mass` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["lambda", "u_max", "mass"])?;
        for s in &self.states {
            w.write_record([fmt(s.lambda), fmt(s.u_max), fmt(s.mass)])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn fmt<T: Scalar>(x: T) -> String {
    format!("{:e}", x.as_f64())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchTarget<T> {
    /// Stop once `λ ≤ value` while `λ` decreases.
    LambdaMin(T),
    /// Stop once `u_max ≥ value`.
    UMax(T),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinuationOptions {
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
    pub corrector_iterations: usize,
    pub tolerance: f64,
    pub check_resolution: bool,
    /// Number of most recent states that keep their grid values (at least 3).
    pub keep_profiles: usize,
    /// Width in `u_max` of the golden-section search for the fold.
    pub fold_tolerance: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            initial_step: 0.05,
            max_step: 0.5,
            min_step: 1e-12,
            max_steps: 20_000,
            corrector_iterations: 8,
            tolerance: 1e-10,
            check_resolution: true,
            keep_profiles: usize::MAX,
            fold_tolerance: 1e-7,
        }
    }
}

/// Serializable snapshot from which a continuation resumes exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint<T> {
    pub domain: DomainSpec<T>,
    pub grid: GridSpec<T>,
    pub options: ContinuationOptions,
    pub step: f64,
    pub steps_taken: usize,
    pub peak: usize,
    pub branch: SolutionBranch<T>,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_string(self)?)?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Stateful branch follower.
#[derive(Debug, Clone)]
pub struct Continuation<T> {
    solver: Solver<T>,
    options: ContinuationOptions,
    branch: SolutionBranch<T>,
    step: f64,
    steps_taken: usize,
    peak: usize,
    omega: Vec<T>,
}

fn argmax<T: Scalar>(u: &[T]) -> usize {
    let mut best = 0;
    for (k, &x) in u.iter().enumerate() {
        if x > u[best] {
            best = k;
        }
    }
    best
}

impl<T: Scalar> Continuation<T> {
    /// Starts from a state that is refined with Newton's method first.
    pub fn new(disc: Discretization<T>, lambda0: T, u0: &[T], options: ContinuationOptions) -> Result<Self> {
        if !(lambda0 > T::zero()) {
            return Err(Error::LambdaOutOfRange(lambda0.as_f64()));
        }
        let solver = Solver::new(disc);
        let newton = NewtonOptions { tolerance: options.tolerance, ..Default::default() };
        let u = solver.newton_solve(lambda0, u0, &newton)?.u;
        let mut c = Self::assemble(solver, options, SolutionBranch::default(), options.initial_step, 0, 0);
        c.push(lambda0, u, T::zero());
        Ok(c)
    }

    fn assemble(
        solver: Solver<T>,
        options: ContinuationOptions,
        branch: SolutionBranch<T>,
        step: f64,
        steps_taken: usize,
        peak: usize,
    ) -> Self {
        let w = solver.disc.weights();
        let total: T = w.iter().copied().sum();
        let omega = w.iter().map(|&x| x / total).collect();
        Continuation { solver, options, branch, step, steps_taken, peak, omega }
    }

    pub fn from_checkpoint(cp: Checkpoint<T>) -> Result<Self> {
        let disc = Discretization::new(cp.domain, cp.grid)?;
        if cp.branch.states.iter().rev().take(2).any(|s| s.u.len() != disc.len()) {
            return Err(Error::Config("checkpoint lacks the trailing profiles".into()));
        }
        Ok(Self::assemble(Solver::new(disc), cp.options, cp.branch, cp.step, cp.steps_taken, cp.peak))
    }

    /// Snapshot keeping only the last three profiles.
    pub fn checkpoint(&self) -> Checkpoint<T> {
        let mut branch = self.branch.clone();
        let n = branch.states.len();
        for s in branch.states.iter_mut().take(n.saturating_sub(3)) {
            s.u.clear();
        }
        Checkpoint {
            domain: self.solver.disc.domain,
            grid: self.solver.disc.spec,
            options: self.options,
            step: self.step,
            steps_taken: self.steps_taken,
            peak: self.peak,
            branch,
        }
    }

    pub fn branch(&self) -> &SolutionBranch<T> {
        &self.branch
    }

    pub fn into_branch(self) -> SolutionBranch<T> {
        self.branch
    }

    pub fn solver(&self) -> &Solver<T> {
        &self.solver
    }

    pub fn discretization(&self) -> &Discretization<T> {
        &self.solver.disc
    }

    pub fn step_size(&self) -> f64 {
        self.step
    }

    fn dot(&self, a: &[T], b: &[T]) -> T {
        let mut s: T = a.iter().zip(b).zip(&self.omega).map(|((&x, &y), &w)| w * x * y).sum();
        s += a[self.peak] * b[self.peak];
        s
    }

    fn push(&mut self, lambda: T, u: Vec<T>, s: T) {
        self.peak = argmax(&u);
        let state = BranchState { lambda, u_max: u[self.peak], s, mass: self.solver.mass(&u, lambda), u };
        self.branch.states.push(state);
        let keep = self.options.keep_profiles.max(3);
        let n = self.branch.states.len();
        if n > keep {
            self.branch.states[n - keep - 1].u.clear();
        }
    }

    /// Unit tangent `(t_u, t_ℓ)` at the last state.
    fn tangent(&self) -> Result<(Vec<T>, T)> {
        let st = &self.branch.states;
        let n = st.len();
        let last = &st[n - 1];
        let (du, dl) = if n >= 2 {
            let prev = &st[n - 2];
            let du: Vec<T> = last.u.iter().zip(&prev.u).map(|(a, b)| *a - *b).collect();
            (du, last.lambda.ln() - prev.lambda.ln())
        } else {
            let lu = self.solver.factor(&last.u, last.lambda)?;
            let z = lu.solve(&self.source(&last.u, last.lambda));
            let sign = if z[self.peak] >= T::zero() { T::one() } else { -T::one() };
            (z.into_iter().map(|x| x * sign).collect(), sign)
        };
        let norm = (self.dot(&du, &du) + dl * dl).sqrt();
        Ok((du.into_iter().map(|x| x / norm).collect(), dl / norm))
    }

    /// `λ W e^u = −∂F/∂ℓ`.
    fn source(&self, u: &[T], lambda: T) -> Vec<T> {
        u.iter().zip(self.solver.disc.weights()).map(|(&x, &w)| lambda * w * x.exp()).collect()
    }

    fn correct(&self, tu: &[T], tl: T, mut u: Vec<T>, mut l: T) -> Option<(Vec<T>, T, usize)> {
        let (u_hat, l_hat) = (u.clone(), l);
        for it in 0..=self.options.corrector_iterations {
            let lambda = l.exp();
            let f = self.solver.residual(&u, lambda);
            let res = super::newton::scaled_norm(&f, self.solver.disc.weights(), &u, lambda);
            if !res.is_finite() {
                return None;
            }
            if self.solver.converged(res, &u, lambda, self.options.tolerance) {
                return Some((u, l, it));
            }
            if it == self.options.corrector_iterations {
                return None;
            }
            let lu = self.solver.factor(&u, lambda).ok()?;
            let diff: Vec<T> = u.iter().zip(&u_hat).map(|(a, b)| *a - *b).collect();
            let nres = self.dot(tu, &diff) + tl * (l - l_hat);
            let z1: Vec<T> = lu.solve(&f).into_iter().map(|x| -x).collect();
            let z2 = lu.solve(&self.source(&u, lambda));
            let dl = (-nres - self.dot(tu, &z1)) / (self.dot(tu, &z2) + tl);
            if !dl.is_finite() {
                return None;
            }
            for ((x, a), b) in u.iter_mut().zip(z1).zip(z2) {
                *x += a + dl * b;
            }
            l += dl;
        }
        None
    }

    /// One accepted arclength step.
    pub fn step(&mut self) -> Result<&BranchState<T>> {
        let (tu, tl) = self.tangent()?;
        let (u1, l1, s1) = {
            let last = self.branch.states.last().unwrap();
            (last.u.clone(), last.lambda.ln(), last.s)
        };
        loop {
            let ds = T::lit(self.step);
            let u_pred: Vec<T> = u1.iter().zip(&tu).map(|(&x, &t)| x + ds * t).collect();
            let l_pred = l1 + ds * tl;
            if let Some((u, l, iters)) = self.correct(&tu, tl, u_pred, l_pred) {
                let diff: Vec<T> = u.iter().zip(&u1).map(|(a, b)| *a - *b).collect();
                let dist = (self.dot(&diff, &diff) + (l - l1) * (l - l1)).sqrt();
                if iters <= 2 {
                    self.step = (self.step * 1.5).min(self.options.max_step);
                } else if iters > 5 {
                    self.step *= 0.5;
                }
                self.steps_taken += 1;
                log::trace!("step {}: λ={} iters={iters} ds={}", self.steps_taken, l.exp(), self.step);
                self.push(l.exp(), u, s1 + dist);
                self.detect_fold()?;
                if self.options.check_resolution {
                    self.check_resolution()?;
                }
                return Ok(self.branch.states.last().unwrap());
            }
            self.step *= 0.5;
            if self.step < self.options.min_step {
                return Err(Error::StepFloorReached(self.step));
            }
        }
    }

    fn check_resolution(&self) -> Result<()> {
        let last = self.branch.states.last().unwrap();
        let delta = (last.lambda * last.u_max.exp()).sqrt().recip();
        let h = self.solver.disc.local_spacing(self.peak);
        if delta < T::lit(4.0) * h {
            return Err(Error::MeshUnderResolved { delta: delta.as_f64(), spacing: h.as_f64() });
        }
        Ok(())
    }

    fn detect_fold(&mut self) -> Result<()> {
        let n = self.branch.states.len();
        if self.branch.fold.is_some() || n < 3 {
            return Ok(());
        }
        let st = &self.branch.states;
        let before = st[n - 2].lambda - st[n - 3].lambda;
        let after = st[n - 1].lambda - st[n - 2].lambda;
        if !(before > T::zero() && after < T::zero()) {
            return Ok(());
        }
        let fold = self.refine_fold(n - 3, n - 1)?;
        log::debug!("fold at λ*={} (u_max={})", fold.lambda, fold.u_max);
        self.branch.fold = Some(fold);
        Ok(())
    }

    /// Golden-section maximization of `λ` over `u_max` between two states.
    fn refine_fold(&self, i0: usize, i1: usize) -> Result<Fold<T>> {
        let st = &self.branch.states;
        let mut lo = st[i0].u_max;
        let mut hi = st[i1].u_max;
        let g = T::lit(0.5 * (5f64.sqrt() - 1.0));
        let eval = |a: T| self.solve_at_amplitude(a).map(|s| s.lambda);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let mut f1 = eval(x1)?;
        let mut f2 = eval(x2)?;
        while hi - lo > T::lit(self.options.fold_tolerance) {
            if f1 > f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = eval(x1)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = eval(x2)?;
            }
        }
        let (u_max, lambda) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
        Ok(Fold { lambda, u_max, index: i0 + 1 })
    }

    /// Follows the branch until `target` is met.
    pub fn run(&mut self, target: BranchTarget<T>) -> Result<&SolutionBranch<T>> {
        self.run_with(target, |_| Ok(()))
    }

    /// As [`Continuation::run`], calling `hook` after every accepted step.
    pub fn run_with(
        &mut self,
        target: BranchTarget<T>,
        mut hook: impl FnMut(&Self) -> Result<()>,
    ) -> Result<&SolutionBranch<T>> {
        if let BranchTarget::LambdaMin(l) = target {
            if !(l > T::zero()) {
                return Err(Error::LambdaOutOfRange(l.as_f64()));
            }
        }
        while !self.reached(target) {
            if self.steps_taken >= self.options.max_steps {
                return Err(Error::ConvergenceFailure(format!("no target after {} steps", self.steps_taken)));
            }
            self.step()?;
            hook(self)?;
        }
        Ok(&self.branch)
    }

    pub fn reached(&self, target: BranchTarget<T>) -> bool {
        let st = &self.branch.states;
        let last = st.last().unwrap();
        match target {
            BranchTarget::UMax(v) => last.u_max >= v,
            BranchTarget::LambdaMin(l) => st.len() >= 2 && last.lambda < st[st.len() - 2].lambda && last.lambda <= l,
        }
    }

    /// Latest pair of stored states with `key` bracketing `value`.
    fn bracket(&self, value: T, key: impl Fn(&BranchState<T>) -> T) -> Option<(usize, T)> {
        let st = &self.branch.states;
        (1..st.len()).rev().find_map(|i| {
            let (a, b) = (&st[i - 1], &st[i]);
            if a.u.is_empty() || b.u.is_empty() {
                return None;
            }
            let (ka, kb) = (key(a), key(b));
            if (ka - value) * (kb - value) <= T::zero() && ka != kb {
                Some((i - 1, (value - ka) / (kb - ka)))
            } else {
                None
            }
        })
    }

    fn blend(&self, i: usize, w: T) -> (Vec<T>, T) {
        let (a, b) = (&self.branch.states[i], &self.branch.states[i + 1]);
        let u = a.u.iter().zip(&b.u).map(|(&x, &y)| x + w * (y - x)).collect();
        let l = a.lambda.ln() + w * (b.lambda.ln() - a.lambda.ln());
        (u, l)
    }

    /// Converged state at `λ`, seeded from the latest bracketing states.
    pub fn solve_at_lambda(&self, lambda: T) -> Result<BranchState<T>> {
        let (i, w) = self
            .bracket(lambda.ln(), |s| s.lambda.ln())
            .ok_or_else(|| Error::InvalidArgument(format!("λ = {lambda} is not bracketed by the branch")))?;
        let (guess, _) = self.blend(i, w);
        let newton = NewtonOptions { tolerance: self.options.tolerance, ..Default::default() };
        let u = self.solver.newton_solve(lambda, &guess, &newton)?.u;
        Ok(self.finish(lambda, u, i, w))
    }

    /// Converged state with `u_max = amplitude` at the tracked peak node.
    pub fn solve_at_amplitude(&self, amplitude: T) -> Result<BranchState<T>> {
        let (i, w) = self
            .bracket(amplitude, |s| s.u_max)
            .ok_or_else(|| Error::InvalidArgument(format!("u_max = {amplitude} is not bracketed by the branch")))?;
        let (mut u, mut l) = self.blend(i, w);
        let p = self.peak;
        for it in 0..=self.options.corrector_iterations * 2 {
            let lambda = l.exp();
            let f = self.solver.residual(&u, lambda);
            let res = super::newton::scaled_norm(&f, self.solver.disc.weights(), &u, lambda);
            if self.solver.converged(res, &u, lambda, self.options.tolerance) && (u[p] - amplitude).abs() <= T::lit(1e-12) * amplitude.abs().max(T::one()) {
                return Ok(self.finish(lambda, u, i, w));
            }
            if !res.is_finite() || it == self.options.corrector_iterations * 2 {
                return Err(Error::NewtonDiverged { iterations: it, residual: res });
            }
            let lu: RefinedLu<T> = self.solver.factor(&u, lambda)?;
            let z1: Vec<T> = lu.solve(&f).into_iter().map(|x| -x).collect();
            let z2 = lu.solve(&self.source(&u, lambda));
            let dl = (amplitude - u[p] - z1[p]) / z2[p];
            for ((x, a), b) in u.iter_mut().zip(z1).zip(z2) {
                *x += a + dl * b;
            }
            l += dl;
        }
        unreachable!()
    }

    fn finish(&self, lambda: T, u: Vec<T>, i: usize, w: T) -> BranchState<T> {
        let st = &self.branch.states;
        let s = st[i].s + w * (st[i + 1].s - st[i].s);
        let u_max = u.iter().fold(T::neg_infinity(), |m, &x| m.max(x));
        BranchState { lambda, u_max, s, mass: self.solver.mass(&u, lambda), u }
    }
}

/// Follows the solution branch through `(λ0, u0)` in the direction of
/// increasing `u_max` until `target` is met.
pub fn continue_branch<T: Scalar>(
    disc: &Discretization<T>,
    from: (T, &[T]),
    target: BranchTarget<T>,
    options: &ContinuationOptions,
) -> Result<SolutionBranch<T>> {
    let mut c = Continuation::new(disc.clone(), from.0, from.1, *options)?;
    c.run(target)?;
    Ok(c.into_branch())
}
