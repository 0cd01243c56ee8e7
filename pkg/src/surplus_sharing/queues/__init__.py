from surplus_sharing.queues.run_queue import RunQueue
