"""Topic-aware community search over combined road and social networks."""
