pub mod field;
pub mod jet;
pub mod linalg;
pub mod text;
pub mod quadform;
pub mod split;
pub mod ift;
pub mod transport;
pub mod jacobian;
pub mod sample;
pub mod cli;
