"""Monte-Carlo network simulator (ground truth for the analytic engine)."""
