"""G-odometers and G-Toeplitz arrays over finitely generated groups."""
