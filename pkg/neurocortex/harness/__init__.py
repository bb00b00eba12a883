"""Scenario scripting, snapshots, traces, the REPL and the CLI."""
