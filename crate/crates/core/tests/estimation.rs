use proptest::prelude::*;
use spdnn::bounds::{self, BoundInputs, DependenceParams, NetClass, PsiKind, Regime, ScheduleArch, ScheduleParams};
use spdnn::dgp::{make_supervised, simulate_arx_arch, target_f, DgpKind, DgpSpec, Trajectory};
use spdnn::loss::{empirical_risk, lipschitz_constants};
use spdnn::penalty::clipped_norm;
use spdnn::rng::rng_from_seed;
use spdnn::train::{train_npdnn, train_spdnn};
use spdnn::{Architecture, InitScheme, LossKind, Network, PenaltyConfig, TrainConfig};

fn small_arch() -> Architecture {
    Architecture::uniform(3, 2, 16, 1e3, 1e3).unwrap()
}

fn dgp1_data(n: usize, seed: u64) -> spdnn::SupervisedSet {
    let traj = simulate_arx_arch(&DgpSpec::new(DgpKind::Dgp1), n + 2, &mut rng_from_seed(seed), seed).unwrap();
    make_supervised(&traj, 2).unwrap()
}

fn quick_cfg(seed: u64) -> TrainConfig {
    TrainConfig { max_epochs: 150, ..TrainConfig::default().with_seed(seed) }
}

#[test]
fn training_reduces_risk_and_is_reproducible() {
    let data = dgp1_data(300, 1);
    let arch = small_arch();
    let loss = LossKind::l2();
    let start = Network::new(arch.clone(), InitScheme::GlorotUniform, spdnn::rng::derive_seed(5, &[0])).unwrap();
    let initial = empirical_risk(&start, &data, &loss).unwrap().value;

    let pen = PenaltyConfig::new(1e-4, 0.05).unwrap();
    let a = train_spdnn(&data, &arch, &pen, &loss, &quick_cfg(5)).unwrap();
    let b = train_spdnn(&data, &arch, &pen, &loss, &quick_cfg(5)).unwrap();
    assert_eq!(a.network.params(), b.network.params());

    let fitted = empirical_risk(&a.network, &data, &loss).unwrap().value;
    let oracle = (0..data.len())
        .map(|i| {
            let r = data.row(i);
            (target_f(&DgpKind::Dgp1, r[0], r[1], r[2]) - data.y()[i]).powi(2)
        })
        .sum::<f64>()
        / data.len() as f64;
    assert!(fitted < initial && fitted <= 1.1 * oracle, "risk {fitted}, oracle {oracle}, initial {initial}");
    let objective = fitted + pen.lambda * clipped_norm(a.network.params(), pen.tau).unwrap();
    assert!((objective - a.best_objective).abs() < 1e-12);
    assert_eq!(a.best_so_far().last().copied(), Some(a.best_objective));
}

#[test]
fn unpenalized_fit_matches_zero_lambda() {
    let data = dgp1_data(120, 2);
    let arch = Architecture::uniform(3, 1, 8, 1e3, 1e3).unwrap();
    let loss = LossKind::l1();
    let cfg = TrainConfig { max_epochs: 40, ..TrainConfig::default().with_seed(3) };
    let np = train_npdnn(&data, &arch, &loss, &cfg).unwrap();
    let sp = train_spdnn(&data, &arch, &PenaltyConfig::new(0.0, 0.1).unwrap(), &loss, &cfg).unwrap();
    assert_eq!(np.network.params(), sp.network.params());
}

#[test]
fn network_text_roundtrip_preserves_predictions() {
    let data = dgp1_data(50, 3);
    let net = Network::new(small_arch(), InitScheme::GlorotUniform, 9).unwrap();
    let back = Network::from_text(&net.to_text()).unwrap();
    assert_eq!(net.forward_batch(data.x()).unwrap(), back.forward_batch(data.x()).unwrap());
    assert!(net.check_constraints(&small_arch()).all_ok());
}

#[test]
fn trajectory_csv_roundtrip() {
    let traj = simulate_arx_arch(&DgpSpec::new(DgpKind::Dgp2), 40, &mut rng_from_seed(4), 4).unwrap();
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("# seed=4\n"));
    let back = Trajectory::read_csv(&buf[..]).unwrap();
    assert_eq!((back.y, back.cov, back.seed), (traj.y, traj.cov, 4));
}

#[test]
fn bounds_from_a_concrete_architecture() {
    let arch = Architecture::uniform(3, 1, 4, 1.0, 2.0).unwrap().with_sparsity(3);
    let c = lipschitz_constants(&LossKind::l1().with_domain_bound(10.0), &arch);
    let inputs = BoundInputs {
        n: 1e9,
        eta: 0.05,
        nu0: 0.5,
        m: c.m,
        theta_inf: 0.1,
        g: c.g,
        c_sigma: 1.0,
        class: NetClass::from_arch(&arch),
    };
    let g = bounds::generalization_epsilon(&inputs).unwrap();
    assert!(g.eps1 < g.eps1_cap);
    assert!(bounds::phi(&inputs, g.eps1).abs() < 1e-10);
    assert!(g.eps_prime > 0.0);

    let dep = DependenceParams { psi_kind: PsiKind::Lambda, l1: 1.0, l2: 1.0, mu: 0.5 };
    let p = ScheduleParams {
        nu1: 0.05,
        nu2: 0.05,
        nu3: 1.0,
        nu4: 0.1,
        nu5: 0.6,
        nu6: 0.1,
        k_ell: c.k_ell,
        m_n: c.m,
        lambda_multiplier: 1.0,
    };
    let sa = ScheduleArch { depth: 1.0, width: 4.0, weight_bound: 1.0 };
    let small = bounds::schedule(Regime::Theorem4, &p, &dep, &sa, 1e3).unwrap();
    let large = bounds::schedule(Regime::Theorem4, &p, &dep, &sa, 1e6).unwrap();
    assert!(large.rho_n < small.rho_n && large.tau_n_max < small.tau_n_max);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn supervised_rows_align_with_trajectory(n in 3usize..60, seed in any::<u64>()) {
        let traj = simulate_arx_arch(&DgpSpec::new(DgpKind::Dgp1), n, &mut rng_from_seed(seed), seed).unwrap();
        let set = make_supervised(&traj, 2).unwrap();
        prop_assert_eq!(set.len(), n - 2);
        for i in 0..set.len() {
            let t = i + 2;
            prop_assert_eq!(set.row(i), vec![traj.y[t - 1], traj.y[t - 2], traj.cov[t - 1]]);
            prop_assert_eq!(set.y()[i], traj.y[t]);
        }
    }

    #[test]
    fn predictions_respect_output_bound(seed in any::<u64>(), f in 0.01f64..5.0) {
        let arch = Architecture::uniform(3, 2, 8, 1e3, f).unwrap();
        let net = Network::new(arch, InitScheme::GlorotUniform, seed).unwrap();
        let scaled = net.load_params(spdnn::ParamVector(net.params().iter().map(|p| 50.0 * p).collect())).unwrap();
        let data = dgp1_data(20, seed);
        for p in scaled.forward_batch(data.x()).unwrap() {
            prop_assert!(p.abs() <= f);
        }
    }
}
