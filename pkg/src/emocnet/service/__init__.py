"""Session-oriented HTTP service exposing the active-learning loop to
human annotators."""
