//! Recognizability scoring and quality-gated matching for unit-norm
//! embeddings on the hypersphere.
//!
//! Face embeddings of poor-quality captures (blur, occlusion, extreme pose)
//! don't scatter uniformly: they collapse toward a shared region of the
//! hypersphere regardless of whose face they came from. This crate exploits
//! that structure end to end:
//!
//! - [`cluster`] discovers the collapsed region by agglomerative clustering
//!   over chordal distance and extracts its centroid — the
//!   *unrecognizable-identity* (UI) model.
//! - [`ers`] scores any embedding by its distance from that centroid: the
//!   embedding recognizability score (ERS), `min(1 - cos(f, ui), 1)`. Low
//!   ERS means the embedding looks like every other unrecognizable capture.
//! - [`decisions`] applies recognizability gates to verification and
//!   gallery search so that unidentifiable inputs are rejected as
//!   *unrecognizable* rather than silently mismatched.
//! - [`aggregation`] fuses multi-capture templates with ERS-derived weights
//!   so sharp captures dominate blurred ones.
//! - [`metrics`] evaluates pipelines with standard biometric protocols:
//!   TAR at fixed FAR, FNIR at fixed FPIR, and rank-K accuracy, with
//!   deterministic threshold selection.
//! - [`synthetic`] generates seeded benchmark corpora with known
//!   ground-truth recognizability for end-to-end testing.
//! - [`io`] reads and writes the on-disk formats (embedding containers,
//!   CSV protocols, UI models, reports).
//!
//! All similarity is cosine over unit vectors; inputs are renormalized on
//! construction so downstream code can rely on the invariant.

pub mod aggregation;
pub mod cluster;
pub mod decisions;
pub mod embedding;
pub mod ers;
pub mod io;
pub mod metrics;
pub mod synthetic;

mod error;

pub use error::{Error, Result};

pub use aggregation::{
    compute_weights, AggregateResult, Template, TemplateMember, WeightingStrategy,
};
pub use cluster::{ClusterParams, ClusterResult, Linkage, UiModel, DEFAULT_THRESHOLD};
pub use decisions::{DecisionConfig, SearchOutcome, DEFAULT_GAMMA};
pub use embedding::{Embedding, LabeledEmbedding, DEGENERATE_NORM, UNIT_NORM_TOLERANCE};
pub use ers::ErsValue;
pub use metrics::{
    EvalReport, IdentificationPoint, OperatingPoint, Pipeline, ProtocolPair, TemplateSpec,
};
pub use synthetic::{GeneratorConfig, GroundTruthRecord, SyntheticBenchmark};
