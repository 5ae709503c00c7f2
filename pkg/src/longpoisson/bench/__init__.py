"""Reference solvers, experiment runner and command-line entry point."""
