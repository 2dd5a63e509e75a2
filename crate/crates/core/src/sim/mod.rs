//! Dense simulation of qudit graph states, stabilizer tests, and seeded
//! Monte Carlo protocol runs.

pub mod graph;
pub mod pauli;
pub mod protocol;
pub mod state;

pub use graph::GraphSpec;
pub use pauli::{site_observables, stabilizer_element, stabilizer_generator, PauliString};
pub use protocol::{
    run_protocol_iid, run_protocol_mixture, sample_test, IidRunReport, MixtureRunReport,
    TestRecord, TestSampler, TrialRecord,
};
pub use state::{
    apply_depolarizing, apply_site_dephasing, apply_site_rotation, build_graph_state,
    calibrate_noise, infidelity, pass_probability, strategy_operator, strategy_operator_mixing,
    test_projector, QuantumState,
};
