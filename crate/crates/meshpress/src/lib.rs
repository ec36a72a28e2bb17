//! Job service, printer access and command-line front end around
//! [`meshpress_core`].

pub mod api;
pub mod cli;
pub mod job;
pub mod printer;
pub mod service;
pub mod settings;
pub mod store;
pub mod stylizer;
