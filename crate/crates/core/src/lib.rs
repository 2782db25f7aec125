//! Oversmoothing laboratory for graph neural networks.
//!
//! The crate computes energy-based and rank-based oversmoothing metrics on node
//! feature matrices, simulates GCN and GAT message passing on small graphs,
//! checks the Perron-Frobenius contraction machinery behind rank collapse, and
//! reproduces the synthetic decay study and the log-metric/accuracy
//! correlation analysis.
//!
//! ```
//! use oversmooth::graph::Graph;
//! use oversmooth::linalg::DenseMatrix;
//! use oversmooth::metrics::{effective_rank, numerical_rank};
//!
//! let x = DenseMatrix::from_diag(&[2.0, 1.0]);
//! assert!((numerical_rank(&x).unwrap() - 1.25).abs() < 1e-12);
//! assert!(effective_rank(&x).unwrap() > 1.0);
//! let g = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
//! assert_eq!(g.degrees(), &[1, 2, 1]);
//! ```

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod graph;
pub mod hilbert;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod propagate;
pub mod rng;

pub use error::{Error, Result};
pub use graph::Graph;
pub use linalg::DenseMatrix;
pub use metrics::{Metric, MetricReport};
