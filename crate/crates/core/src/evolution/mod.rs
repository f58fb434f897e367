//! Time integration: characteristics, semi-Lagrangian transport and the
//! norm-growth audit.

mod advect;
mod audit;
mod flow;
mod run;

pub use advect::{advect_field, Advected};
pub use audit::{norm_growth_audit, riccati_envelope, EnvelopeViolation, GrowthAudit, MIN_AUDIT_SAMPLES};
pub use flow::{rk4, step_flow, FlowMap, GridSampler, Tracer, TracerLabel, VelocitySampler};
pub use run::{
    run, Integrator, Interpolation, RunOutput, Simulation, SimulationState, StepRecord,
    TimeStepConfig,
};
