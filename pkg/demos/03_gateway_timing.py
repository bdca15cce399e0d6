# Show the store-and-forward gateway pacing deliveries like a slow modem:
# a burst of buffered replies leaves at one message per second, strictly
# in order, with dense per-phone sequence numbers.

from smsquiz.gateway import Gateway, SimClock
from smsquiz.tables import Store

store = Store()
clock = SimClock()
gateway = Gateway(store, drain_rate=1.0, clock=clock)

print("buffering 6 messages for two phones at t=0")
for i in range(6):
    phone = "07700900001" if i % 2 == 0 else "07700900002"
    store.push_message(phone, f"MESSAGE {i}")

while store.outbox:
    clock.advance(1.0)
    for msg in gateway.drain():
        print(f"t={clock():>4.0f}s  deliver to {msg.to} seq={msg.seq}: {msg.text}")

print("\npolling each handset (as GET /sms?to=<phone>&after=0 would):")
for phone in ("07700900001", "07700900002"):
    texts = [f"{m.seq}:{m.text}" for m in gateway.poll_outbound(phone, after_seq=0)]
    print(f"  {phone}: {texts}")

print("\nwith drain_rate=1000 the same burst leaves in one tick:")
store2 = Store()
clock2 = SimClock()
fast = Gateway(store2, drain_rate=1000.0, clock=clock2)
for i in range(6):
    store2.push_message("07700900003", f"M{i}")
clock2.advance(0.01)
print(f"  delivered {len(fast.drain())} messages after 10ms")
