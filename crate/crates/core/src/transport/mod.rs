mod render;
mod sampling;
mod subsurface;

pub use render::{
    quantize, render, render_on, shadow_transmittance, with_workers, Render, RenderSettings, RenderStats,
};
pub use sampling::{
    hg_phase, sample_free_path, sample_hg, sample_interaction, straight_transmittance, InteractionEvent,
    InteractionKind,
};
pub use subsurface::{trace_subsurface, WalkDomain, WalkLimits, WalkOutcome, WalkResult, DEFAULT_STEP_CAP};
