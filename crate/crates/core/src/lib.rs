//! Twin-beam parametric down-conversion speckle: closed-form coherence
//! predictions, stochastic frame synthesis, a CCD forward model and the
//! estimation chain that recovers speckle radius, temporal-mode count and
//! parametric gain from single-shot frames.

pub mod analysis;
pub mod campaign;
pub mod config;
pub mod detector;
pub mod error;
pub mod fft;
pub mod io;
pub mod phasematch;
pub mod report;
pub mod rng;
pub mod synthesis;

pub use campaign::{run_campaign, CampaignResult, CampaignSpec};
pub use analysis::{CorrelationKind, CorrelationMap, EstimateReport, FitResult, Region};
pub use config::{
    AnalysisConfig, AnalysisSource, CrystalConfig, DetectorConfig, ExperimentConfig, PumpConfig,
    RadiusConvention, RegimeSelection, SamplingOrdering, SynthesisConfig,
};
pub use detector::{Detector, Frame, FrameMetadata};
pub use error::{Error, Result};
pub use io::{load_config, load_frame, save_config, save_frame};
pub use phasematch::{CoherencePrediction, Regime};
pub use report::{predict, PredictReport};
pub use synthesis::{FrameIntensity, GainProfile, PulseDraw, SimulationGrid, SpeckleField, Synthesizer};
