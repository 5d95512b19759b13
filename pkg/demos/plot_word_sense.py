"""
Rejecting a word sense before expanding it
==========================================

"went" has two senses, go1 (common) and die1 (rare).  A syntactic cue
("to" + place) votes for go1.  die1 has an expansion rule that would add a
death event, but the commit loop evaluates each new hypothesis before its
rules run; die1 falls under the rejection threshold and is never expanded.
"""

from bnforge import Session, load_bundled, parse_term

session = Session()
session.engine.load(load_bundled("wordsense"))
result = session.run_loop([parse_term("(saw-cue w1 to-place)"), parse_term("(heard w1 went)")])

for event in result.commits:
    print(f"round {event.round}: {event.action} {event.statement} = {event.state}  (p={event.probability:.3g})")

print("nodes:", sorted(n.name for n in result.graph))
print("death event asserted?", session.engine.db.lookup(parse_term("(death-event w1)")) is not None)

# %%
# With rejection switched off the same inputs do expand die1.
lenient = Session(tau_reject=0.0, tau_accept=1.01)
lenient.engine.load(load_bundled("wordsense"))
lenient.run_loop([parse_term("(saw-cue w1 to-place)"), parse_term("(heard w1 went)")])
print("nodes:", sorted(n.name for n in lenient.graph))
