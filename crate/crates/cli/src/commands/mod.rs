pub mod build;
pub mod martingale;
pub mod tree;
pub mod verify;
