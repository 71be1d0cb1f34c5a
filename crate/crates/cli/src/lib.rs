//! The `qrmap` command-line tool and its local HTTP service.

pub mod args;
pub mod commands;
pub mod input;
pub mod server;
pub mod session;
pub mod summary;
