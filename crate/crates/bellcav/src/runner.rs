//! Scenario orchestration. (in progress)
