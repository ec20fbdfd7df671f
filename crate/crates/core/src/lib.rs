pub mod geometry;
pub mod insight;
pub mod lp;
pub mod maa;
pub mod model;
pub mod pipeline;
pub mod sampler;
pub mod service;
