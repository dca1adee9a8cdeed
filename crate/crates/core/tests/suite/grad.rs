//! Analytic gradients versus central finite differences, in f64.

use super::fd::{max_rel_err, numeric_grad, rel_err, FD_STEP, REL_TOL};
use super::Outcome;
use fishtank::autodiff::{Graph, ParamId, ParamStore, Tensor, Var};
use fishtank::nn::{Activation, DenseLayer, Mlp};
use fishtank::ppo::{surrogate_loss, PolicyNet, PpoConfig, SurrogateBatch};
use fishtank::render::{Observation, OBS_LEN};
use fishtank::world::ActionPair;
use fishtank::RngStream;

/// Random cases per checked operator; four operators make the hundred.
pub const CASES: usize = 25;

fn rand_vec(rng: &mut RngStream, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.uniform_range(-scale, scale)).collect()
}

/// Worst relative error of ∂loss/∂(each leaf), where `build` maps leaves to a scalar.
fn check_leaves(shapes: &[Vec<usize>], values: &[Vec<f64>], build: impl Fn(&mut Graph<'_, f64>, &[Var]) -> Var) -> f64 {
    let leaves = |g: &mut Graph<'_, f64>, vals: &[Vec<f64>]| -> Vec<Var> {
        shapes.iter().zip(vals).map(|(s, v)| g.variable(Tensor::new(s, v.clone()).unwrap())).collect()
    };
    let eval = |vals: &[Vec<f64>]| -> f64 {
        let mut g = Graph::new();
        let vars = leaves(&mut g, vals);
        let l = build(&mut g, &vars);
        g.value(l).item()
    };
    let mut g = Graph::new();
    let vars = leaves(&mut g, values);
    let l = build(&mut g, &vars);
    let grads = g.backward(l).unwrap();
    let mut worst = 0.0f64;
    for (i, v) in vars.iter().enumerate() {
        let numeric = numeric_grad(&values[i], |x| {
            let mut vals = values.to_vec();
            vals[i] = x.to_vec();
            eval(&vals)
        });
        worst = worst.max(max_rel_err(&grads.wrt(*v), &numeric));
    }
    worst
}

fn per_case(name: &str, mut case: impl FnMut(usize) -> f64) -> Outcome {
    let mut worst = 0.0f64;
    for c in 0..CASES {
        let err = case(c);
        require!(err < REL_TOL, "{name} case {c}: relative error {err:.3e}");
        worst = worst.max(err);
    }
    Ok(format!("{CASES} cases, worst {worst:.1e}"))
}

pub fn conv2d() -> Outcome {
    let mut rng = RngStream::new(100);
    per_case("conv", |case| {
        let stride = 1 + case % 2;
        let (n, c, h, o, k) = (2, 2, 7, 3, 3);
        let shapes = vec![vec![n, c, h, h], vec![o, c, k, k], vec![o]];
        let oh = (h - k) / stride + 1;
        let weights = Tensor::new(&[n, o, oh, oh], rand_vec(&mut rng, n * o * oh * oh, 1.0)).unwrap();
        let values: Vec<Vec<f64>> = shapes.iter().map(|s| rand_vec(&mut rng, s.iter().product(), 1.0)).collect();
        check_leaves(&shapes, &values, |g, v| {
            let y = g.conv2d(v[0], v[1], Some(v[2]), stride).unwrap();
            let y = g.swish(y);
            let w = g.constant(weights.clone());
            let p = g.mul(y, w).unwrap();
            g.sum(p)
        })
    })
}

pub fn dense() -> Outcome {
    let mut rng = RngStream::new(200);
    per_case("dense", |case| {
        let (n, i, o) = (1 + case % 4, 5, 4);
        let shapes = vec![vec![n, i], vec![o, i], vec![o]];
        let values: Vec<Vec<f64>> = shapes.iter().map(|s| rand_vec(&mut rng, s.iter().product(), 1.0)).collect();
        check_leaves(&shapes, &values, |g, v| {
            let y = g.dense(v[0], v[1], Some(v[2])).unwrap();
            let y = g.square(y);
            g.mean(y)
        })
    })
}

pub fn softmax_cross_entropy() -> Outcome {
    let mut rng = RngStream::new(300);
    per_case("softmax-CE", |case| {
        let (n, k) = (3, 2 + case % 5);
        let labels: Vec<usize> = (0..n).map(|_| rng.below(k)).collect();
        let values = vec![rand_vec(&mut rng, n * k, 3.0)];
        check_leaves(&[vec![n, k]], &values, |g, v| {
            let lp = g.log_softmax(v[0]);
            let picked = g.gather(lp, &labels).unwrap();
            let m = g.mean(picked);
            g.neg(m)
        })
    })
}

/// Clamp, minimum and leaky-ReLU kinks sit at ±0.8 and 0; samples that land
/// within the difference step of one are exempt.
fn near_kink(values: &[Vec<f64>]) -> bool {
    values.iter().flatten().any(|&x| (x.abs() - 0.8).abs() < 2.0 * FD_STEP || x.abs() < 2.0 * FD_STEP)
}

pub fn elementwise() -> Outcome {
    let mut rng = RngStream::new(400);
    let mut worst = 0.0f64;
    for case in 0..CASES {
        let shapes = vec![vec![2, 6], vec![2, 6], vec![2, 3]];
        let values: Vec<Vec<f64>> = shapes.iter().map(|s| rand_vec(&mut rng, s.iter().product(), 1.5)).collect();
        let err = check_leaves(&shapes, &values, |g, v| {
            let e = g.exp(v[0]);
            let c = g.clamp(v[1], -0.8, 0.8);
            let m = g.minimum(e, c).unwrap();
            let d = g.sub(m, v[1]).unwrap();
            let l = g.leaky_relu(d, 0.01);
            let cat = g.concat(l, v[2]).unwrap();
            let r = g.rows(cat, 1, 2).unwrap();
            let r = g.add_scalar(r, 0.5);
            let s = g.scale(r, 1.7);
            let sq = g.square(s);
            g.sum(sq)
        });
        if near_kink(&values) {
            continue;
        }
        require!(err < REL_TOL, "case {case}: relative error {err:.3e}");
        worst = worst.max(err);
    }
    Ok(format!("worst {worst:.1e}"))
}

pub fn mlp_parameters() -> Outcome {
    let mut rng = RngStream::new(500);
    let mut worst = 0.0f64;
    for case in 0..10 {
        let mut store = ParamStore::<f64>::new();
        let mlp = Mlp::new(&mut store, "mlp", 4, 6, 3, &mut rng);
        let head = DenseLayer::new(&mut store, "head", 6, 2, Activation::Linear, 1.0, &mut rng);
        let x = Tensor::new(&[3, 4], rand_vec(&mut rng, 12, 1.0)).unwrap();
        let target = Tensor::new(&[3, 2], rand_vec(&mut rng, 6, 1.0)).unwrap();
        let loss_of = |s: &ParamStore<f64>| -> f64 {
            let mut g = Graph::new();
            let xi = g.constant(x.clone());
            let h = mlp.forward(&mut g, s, xi).unwrap();
            let y = head.forward(&mut g, s, h).unwrap();
            let t = g.constant(target.clone());
            let d = g.sub(y, t).unwrap();
            let sq = g.square(d);
            let l = g.mean(sq);
            g.value(l).item()
        };
        let grads = {
            let mut g = Graph::new();
            let xi = g.constant(x.clone());
            let h = mlp.forward(&mut g, &store, xi).unwrap();
            let y = head.forward(&mut g, &store, h).unwrap();
            let t = g.constant(target.clone());
            let d = g.sub(y, t).unwrap();
            let sq = g.square(d);
            let l = g.mean(sq);
            g.backward(l).unwrap()
        };
        let mut trained = store.clone();
        grads.accumulate_into(&mut trained).unwrap();
        for pi in 0..store.len() {
            let id = ParamId::from_index(pi);
            let numeric = numeric_grad(store.get(id).data(), |v| {
                let mut s = store.clone();
                s.get_mut(id).data_mut().copy_from_slice(v);
                loss_of(&s)
            });
            let err = max_rel_err(trained.get(id).grad().unwrap(), &numeric);
            require!(err < REL_TOL, "case {case} param {pi}: relative error {err:.3e}");
            worst = worst.max(err);
        }
    }
    Ok(format!("worst {worst:.1e}"))
}

fn random_obs(rng: &mut RngStream) -> Observation {
    Observation::from_planar((0..OBS_LEN).map(|_| rng.uniform() as f32).collect()).unwrap()
}

fn surrogate_value(net: &PolicyNet<f64>, batch: &SurrogateBatch<'_>, cfg: &PpoConfig) -> (f64, Vec<bool>) {
    let mut g = Graph::new();
    let t = surrogate_loss(&mut g, net, batch, cfg).unwrap();
    (g.value(t.loss).item(), g.branch_pattern())
}

/// Full clipped surrogate (policy, value and entropy terms) through the whole network.
///
/// Probes whose difference bracket straddles a leaky-ReLU, clip or min kink
/// are detected by comparing branch patterns at both ends and skipped; fewer
/// than one in five may be.
pub fn ppo_surrogate() -> Outcome {
    let cfg = PpoConfig::default();
    let mut rng = RngStream::new(400);
    let (mut worst, mut probes, mut straddling) = (0.0f64, 0usize, 0usize);
    for case in 0..CASES {
        let net32 = PolicyNet::<f32>::new(16, 2, &mut rng);
        let mut net = PolicyNet::<f64>::with_params_from(&net32);
        // Larger weights push the heads away from uniform so gradients are not tiny.
        for t in net.params.tensors_mut() {
            for v in t.data_mut() {
                *v *= 1.0 + rng.uniform();
            }
        }
        let n = 4;
        let obs: Vec<_> = (0..n).map(|_| random_obs(&mut rng)).collect();
        let actions: Vec<_> = (0..n).map(|_| ActionPair::from_index(rng.below(6))).collect();
        let outs = PolicyNet::<f32>::with_params_from(&net).evaluate(&obs.iter().collect::<Vec<_>>()).unwrap();
        // Old log-probs placed so every ratio sits well away from the clip edges.
        let old: Vec<f64> = outs
            .iter()
            .zip(&actions)
            .map(|(o, &a)| o.log_prob(a) - [-0.5, -0.1, 0.05, 0.4][rng.below(4)])
            .collect();
        let batch = SurrogateBatch {
            obs: obs.iter().collect(),
            actions,
            old_log_probs: old,
            advantages: rand_vec(&mut rng, n, 1.0),
            returns: rand_vec(&mut rng, n, 1.0),
        };
        let grads = {
            let mut g = Graph::new();
            let t = surrogate_loss(&mut g, &net, &batch, &cfg).unwrap();
            g.backward(t.loss).unwrap()
        };
        let mut analytic_store = net.params.clone();
        analytic_store.zero_grad();
        grads.accumulate_into(&mut analytic_store).unwrap();
        for pi in 0..net.params.len() {
            let id = ParamId::from_index(pi);
            let len = net.params.get(id).numel();
            for _ in 0..2 {
                let j = rng.below(len);
                let analytic = analytic_store.get(id).grad().unwrap()[j];
                let x0 = net.params.get(id).data()[j];
                let mut probe = |x: f64| {
                    net.params.get_mut(id).data_mut()[j] = x;
                    surrogate_value(&net, &batch, &cfg)
                };
                let (_, below) = probe(x0 - FD_STEP);
                let (_, above) = probe(x0 + FD_STEP);
                let numeric = numeric_grad(&[x0], |x| probe(x[0]).0)[0];
                net.params.get_mut(id).data_mut()[j] = x0;
                probes += 1;
                if below != above {
                    straddling += 1;
                    continue;
                }
                let err = rel_err(analytic, numeric);
                require!(err < REL_TOL, "case {case}, tensor {pi}[{j}]: analytic {analytic} numeric {numeric}");
                worst = worst.max(err);
            }
        }
    }
    require!(straddling * 5 < probes, "{straddling} of {probes} probes straddled a kink");
    Ok(format!("{CASES} cases, {probes} probes ({straddling} on kinks), worst {worst:.1e}"))
}
