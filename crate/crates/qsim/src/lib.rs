pub mod bench;
pub mod cli;
pub mod device;
pub mod format;
pub mod link;
pub mod random;
pub mod sim;
pub mod tcp;
pub mod verify;
pub mod world;
