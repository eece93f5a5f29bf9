pub mod padic;
pub mod pgroup;
pub mod catalog;
pub mod verify;
pub mod repdecomp;
pub mod lielattice;
