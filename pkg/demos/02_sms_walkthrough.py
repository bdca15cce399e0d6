# Play one full game against an in-memory engine and print the SMS thread:
# registration, topic choice, help, grading, and the adaptation jump after
# the tenth answer.

from smsquiz.session import Engine, InboundSms, SessionConfig
from smsquiz.tables import load_store

PHONE = "07700900001"

store = load_store(None, "banks/demo.bank")
engine = Engine(store, SessionConfig(rng_seed=0))
clock = 0.0


def sms(text):
    global clock
    clock += 1.0
    print(f"{clock:>6.0f}s  you>  {text}")
    for reply in engine.handle_message(InboundSms(PHONE, text, clock)):
        print(f"{'':>6}  game<  {reply.text}")


sms("  start ")
sms("NEW ALI 30 16")  # optional age and education feed the controller
sms("1")
sms("#")  # ask for help before answering

# answer everything correctly; the engine tracks the pending question
for _ in range(10):
    row = store.get_active(PHONE)
    sms(str(row.pending.correct_index))

row = store.get_active(PHONE)
print(f"\nafter one block the engine plays level {row.level} "
      f"(shown as L{row.level + 1} in messages)")

sms("EXIT")
sms("2")  # no session anymore

print("\n=== statistics left behind ===")
for stat in store.player_level.values():
    print(f"{stat.player_id} topic={stat.topic_id} level={stat.level} "
          f"asked={stat.total_asked} correct={stat.total_correct}")
print(f"standing: {store.standing_pct(PHONE, 'ALI', 1):.1f}%")
print(f"history rows: {len(store.game_history)}")
