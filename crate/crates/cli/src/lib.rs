//! HTTP session service, oracle benchmark runner and `iqa` command-line front end.

pub mod ask;
pub mod bench;
pub mod inputs;
pub mod service;
pub mod view;
