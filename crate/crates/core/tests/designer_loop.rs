//! End-to-end exercises of the configuration-discovery loop: offline
//! sessions, the HTTP proposer against a canned loopback server, and the
//! evaluation-ledger audit after validation.

use proxyforge::algospace::{AlgorithmConfig, ControlParam, Family};
use proxyforge::designer::{
    champion_set, discover, validate, Condition, DiscoverySession, LlmProposer, LlmSettings,
    OfflineMutator, ProposeError, Proposer, ProposerRequest, ProxySource, SessionSettings,
    StubBehavior, StubServer,
};
use proxyforge::gpgen::ExpressionTree;
use proxyforge::problem::ProblemSpec;
use proxyforge::problems::problem_by_name;
use proxyforge::rng::labeled_stream;

fn tree_proxy(text: &str, dim: usize) -> ProxySource {
    ProxySource::Tree {
        tree: text.parse::<ExpressionTree>().unwrap(),
        spec: ProblemSpec {
            name: format!("proxy:{text}"),
            dim,
            lower: vec![-5.0; dim],
            upper: vec![5.0; dim],
            maximize: false,
            known_optimum: None,
            score_clip: None,
        },
    }
}

fn small_session(seed: u64) -> DiscoverySession {
    let target = problem_by_name("synthetic:sphere:2", 3).unwrap();
    DiscoverySession::new(
        Condition::ProxyDriven,
        target.spec().clone(),
        vec![tree_proxy("sum(square(x))", 2), tree_proxy("mean(abs(x))", 2)],
        SessionSettings {
            iterations: 5,
            repetitions: 2,
            inner_budget: 50,
            proposer_retries: 2,
        },
        seed,
        "loop-test",
    )
    .unwrap()
}

fn request_fixture(config: &AlgorithmConfig) -> ProposerRequest<'_> {
    ProposerRequest {
        task_description: "pick a configuration".into(),
        incumbent_config: config,
        incumbent_score: 0.4,
        recent_history: &[],
        schema: proxyforge::designer::CONFIG_SCHEMA,
    }
}

fn llm_against(server: &StubServer, key_env: &str) -> LlmProposer {
    std::env::set_var(key_env, "stub-key");
    LlmProposer::new(LlmSettings {
        endpoint: server.endpoint(),
        model: "stub-model".into(),
        timeout_secs: 5,
        key_env: key_env.into(),
    })
    .unwrap()
}

#[test]
fn stub_valid_config_is_accepted_verbatim() {
    let server = StubServer::start(StubBehavior::ValidConfig).unwrap();
    let mut proposer = llm_against(&server, "PF_TEST_KEY_VALID");
    let incumbent = AlgorithmConfig::default();
    let request = request_fixture(&incumbent);
    let mut rng = labeled_stream(0, "t", 0);
    let response = proposer.propose(&request, &mut rng).unwrap();
    assert_eq!(response.config.family, Family::De);
    assert_eq!(response.config.f, ControlParam::Fixed(0.7));
    assert!(response.config.archive);
    response.config.validate().unwrap();
    assert_eq!(server.request_count(), 1);
}

#[test]
fn stub_prose_reply_still_yields_a_config_and_rationale() {
    let server = StubServer::start(StubBehavior::ProseWrapped).unwrap();
    let mut proposer = llm_against(&server, "PF_TEST_KEY_PROSE");
    let incumbent = AlgorithmConfig::default();
    let request = request_fixture(&incumbent);
    let mut rng = labeled_stream(0, "t", 0);
    let response = proposer.propose(&request, &mut rng).unwrap();
    assert_eq!(response.config.f, ControlParam::Fixed(0.8));
    assert!(response.rationale.contains("larger steps"));
}

#[test]
fn stub_schema_violation_is_malformed() {
    let server = StubServer::start(StubBehavior::InvalidSchema).unwrap();
    let mut proposer = llm_against(&server, "PF_TEST_KEY_SCHEMA");
    let incumbent = AlgorithmConfig::default();
    let request = request_fixture(&incumbent);
    let mut rng = labeled_stream(0, "t", 0);
    assert!(matches!(
        proposer.propose(&request, &mut rng),
        Err(ProposeError::Malformed(_))
    ));
}

#[test]
fn stub_garbage_reply_is_malformed() {
    let server = StubServer::start(StubBehavior::Garbage).unwrap();
    let mut proposer = llm_against(&server, "PF_TEST_KEY_GARBAGE");
    let incumbent = AlgorithmConfig::default();
    let request = request_fixture(&incumbent);
    let mut rng = labeled_stream(0, "t", 0);
    assert!(matches!(
        proposer.propose(&request, &mut rng),
        Err(ProposeError::Malformed(_))
    ));
}

#[test]
fn unreachable_endpoint_is_unavailable() {
    std::env::set_var("PF_TEST_KEY_DEAD", "stub-key");
    let mut proposer = LlmProposer::new(LlmSettings {
        // Reserved port on localhost; nothing listens there.
        endpoint: "http://127.0.0.1:9/v1/chat/completions".into(),
        model: "stub-model".into(),
        timeout_secs: 2,
        key_env: "PF_TEST_KEY_DEAD".into(),
    })
    .unwrap();
    let incumbent = AlgorithmConfig::default();
    let request = request_fixture(&incumbent);
    let mut rng = labeled_stream(0, "t", 0);
    assert!(matches!(
        proposer.propose(&request, &mut rng),
        Err(ProposeError::Unavailable(_))
    ));
}

#[test]
fn discovery_accepts_stub_proposals_under_the_llm_name() {
    let server = StubServer::start(StubBehavior::ValidConfig).unwrap();
    let mut proposer = llm_against(&server, "PF_TEST_KEY_DISCOVER");
    let mut session = small_session(11);
    let (champion, _) = discover(&mut session, &mut proposer).unwrap();
    champion.validate().unwrap();
    assert!(session.history[1..].iter().all(|e| e.proposer == "llm"));
    // The stub always proposes the same config, so iterations 2.. score
    // identically to iteration 1 under common random numbers.
    let s1 = session.history[1].score;
    assert!(session.history[2..].iter().all(|e| e.score == s1));
}

#[test]
fn discovery_survives_a_garbage_proposer_via_fallback() {
    let server = StubServer::start(StubBehavior::Garbage).unwrap();
    let mut proposer = llm_against(&server, "PF_TEST_KEY_FALLBACK");
    let mut session = small_session(12);
    discover(&mut session, &mut proposer).unwrap();
    assert_eq!(session.history.len(), session.settings.iterations + 1);
    for entry in &session.history[1..] {
        assert_eq!(entry.proposer, "fallback:malformed");
        entry.config.validate().unwrap();
    }
    // Each iteration retried the wire twice before falling back.
    assert_eq!(
        server.request_count(),
        session.settings.iterations * session.settings.proposer_retries as usize
    );
}

#[test]
fn offline_discovery_then_validation_audits_the_budget() {
    let mut session = small_session(21);
    let mut proposer = OfflineMutator;
    discover(&mut session, &mut proposer).unwrap();
    assert_eq!(session.ledger.target_total(), 0, "discovery must not touch the target");

    let champions = champion_set(&session);
    let target = problem_by_name("synthetic:sphere:2", 3).unwrap();
    let budget = 80;
    let runs = 3;
    let report = validate(&champions, &target, budget, runs, &session, 77).unwrap();

    assert_eq!(
        report.actual_target_evals,
        (champions.len() * runs) as u64 * budget
    );
    assert_eq!(
        report.hypothetical_target_evals,
        session.settings.iterations as u64
            * session.settings.repetitions as u64
            * session.settings.inner_budget
    );
    assert_eq!(
        report.h2_ratio,
        report.hypothetical_target_evals as f64 / report.actual_target_evals as f64
    );
    assert_eq!(report.ledger.validation.target_evals, report.actual_target_evals);
    assert_eq!(report.ledger.discovery.proxy_evals, session.ledger.discovery.proxy_evals);
    for champ in &report.champions {
        assert_eq!(champ.aocc.len(), runs);
        assert!(champ.best_values.iter().all(|v| v.is_finite()));
        for record in &champ.records {
            assert_eq!(record.trace.last().unwrap().0, budget);
        }
    }
}

#[test]
fn default_scale_cost_ratio_is_ten() {
    // Default sizing: 100 iterations x 3 repetitions of 50 D-scaled
    // evaluations against proxies, validated by 3 champions x 10 runs at
    // the same per-run budget on the target.
    let dim = 10u64;
    let hypothetical = 100 * 3 * (50 * dim);
    let actual = 3 * 10 * (50 * dim);
    assert_eq!(hypothetical as f64 / actual as f64, 10.0);
}
