"""Monte Carlo experiments, goodness-of-fit tests, configuration and verification suites."""
