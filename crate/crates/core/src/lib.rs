//! Numerical toolkit for G2 calibrated geometry in a flat model.
//!
//! The modules build on each other from the bottom up:
//!
//! * [`cayley`] octonions and the 7-dimensional cross product
//! * [`calib`] calibration forms and plane classification
//! * [`coassoc`] normal vectors of coassociative planes as self-dual forms
//! * [`dirac`] the twisted Dirac operator on a thin cylinder and its spectrum
//! * [`kantor`] Newton iteration with a Kantorovich certificate
//! * [`instanton`] ruled 3-folds in the flat 7-torus and their Newton correction
//! * [`report`] deterministic JSON/CSV output
//! * [`verify`] the property suite behind `g2lab verify-all`
//! * [`cli`] the batch front-end
//!
//! Runnable walkthroughs live in `examples/`.

pub mod calib;
pub mod cli;
pub mod cayley;
pub mod coassoc;
pub mod dirac;
pub mod instanton;
pub mod kantor;
pub mod linalg;
pub mod report;
pub mod tol;
pub mod verify;
