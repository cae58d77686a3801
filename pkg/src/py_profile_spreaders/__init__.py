"""py-profile-spreaders: fake- and real-news spreader profiling toolkit."""
