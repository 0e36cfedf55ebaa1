"""
Parallel benchmark execution on worker processes.

The pool follows the MPTools pattern: a parent context owns a shared
shutdown event, an event queue and a work queue; each child runs a queue
worker that takes run requests until it receives the END sentinel. Workers
report back on the event queue with RESULT, PUBSUB, FATAL and SHUTDOWN
messages. PUBSUB messages carry a worker's local bench.run events, which the
parent republishes on its own pypubsub bus.
"""
import functools
import logging
import multiprocessing
import multiprocessing.context as mpc
import multiprocessing.queues as mpq
import multiprocessing.synchronize as mps
import threading
import time
from queue import Empty, Full
from typing import Any, Dict, List, Optional, Union

from pubsub import pub
from tblib import pickling_support

from anyplan.bench.application import BenchTrace, RunRequest, execute_run

LOGGER = logging.getLogger(__name__)

MPQUEUE_TIMEOUT = 0.02

END = "END"


class BenchmarkRunError(RuntimeError):
    """
    Raised in the parent when a run failed in a worker process. The worker's
    exception, with its traceback, is the __cause__.
    """


class MPQueue(mpq.Queue):
    """
    A multiprocessing Queue with exception-free get and put.
    """

    def __init__(self, maxsize=0, *, ctx):
        if ctx is None:
            ctx = multiprocessing.get_context()
        super().__init__(maxsize, ctx=ctx)

    def safe_get(self, timeout: Union[float, None] = MPQUEUE_TIMEOUT):
        """
        Remove and return an item, or None if nothing arrived within timeout
        seconds (immediately when timeout is None).
        """
        try:
            if timeout is None:
                return self.get(block=False)
            return self.get(block=True, timeout=timeout)
        except Empty:
            return None

    def safe_put(self, item, timeout: Union[float, None] = MPQUEUE_TIMEOUT) -> bool:
        try:
            self.put(item, block=True, timeout=timeout)
            return True
        except Full:
            return False

    def drain(self):
        item = self.safe_get()
        while item:
            yield item
            item = self.safe_get()

    def safe_close(self) -> int:
        """
        Drain and close the queue, returning the number of items discarded.
        """
        num_left = sum(1 for _ in self.drain())
        self.close()
        self.join_thread()
        return num_left


class EventMessage:
    """
    A message on the event queue between workers and the pool.
    """

    def __init__(self, msg_src: str, msg_type: str, msg: Any):
        self.id = time.time()
        self.msg_src = msg_src
        self.msg_type = msg_type
        self.msg = msg

    def __str__(self):
        return f"{self.msg_src:10} - {self.msg_type:10} : {self.msg}"


class BenchWorker:
    """
    Runs benchmark requests taken from the work queue inside a child
    process, posting each result back on the event queue.
    """

    def __init__(
        self,
        name: str,
        startup_event: mps.Event,
        shutdown_event: mps.Event,
        event_q: MPQueue,
        work_q: MPQueue,
    ):
        self.name = name
        # setting thread name makes logs easier to understand
        threading.current_thread().name = name
        self.log = functools.partial(logging.log, extra=dict(source=f"{self.name} Worker"))
        self.startup_event = startup_event
        self.shutdown_event = shutdown_event
        self.event_q = event_q
        self.work_q = work_q

    def republish(self, topic: pub.Topic = pub.AUTO_TOPIC, **kwargs) -> None:
        """
        Forward a local bench.run event to the parent.
        """
        msg_src = kwargs.pop("msg_src", None)
        if msg_src != self.name:
            return
        msg = EventMessage(self.name, "PUBSUB", dict(topic=topic.name, kwargs=kwargs))
        self.event_q.put(msg)

    def startup(self) -> None:
        self.log(logging.DEBUG, "Entering startup")
        # clear any subscriptions inherited from the parent during fork
        pub.unsubAll()
        pickling_support.install()
        pub.subscribe(self.republish, "bench")

    def shutdown(self) -> None:
        self.log(logging.DEBUG, "Entering shutdown")
        pub.unsubscribe(self.republish, "bench")

    def main_func(self, item) -> None:
        index, request = item
        result = execute_run(request, msg_src=self.name)
        self.event_q.put(EventMessage(self.name, "RESULT", (index, result)))

    def main_loop(self) -> None:
        while not self.shutdown_event.is_set():
            item = self.work_q.safe_get()
            if not item:
                continue
            if item == END:
                break
            self.main_func(item)

    def run(self) -> int:
        try:
            self.startup()
            self.startup_event.set()
            self.main_loop()
            self.log(logging.INFO, "Normal Shutdown")
            self.event_q.safe_put(EventMessage(self.name, "SHUTDOWN", "Normal"))
            return 0
        except BaseException as exc:  # pylint: disable=broad-except
            self.log(logging.ERROR, f"Exception Shutdown: {exc}", exc_info=True)
            self.event_q.put(EventMessage(self.name, "FATAL", exc))
            return 1
        finally:
            self.shutdown()


def _worker_main(name, startup_event, shutdown_event, event_q, work_q) -> int:
    return BenchWorker(name, startup_event, shutdown_event, event_q, work_q).run()


class WorkerPool:
    """
    A context manager owning a set of benchmark worker processes.
    """

    # Start-up grace time before a worker is considered failed
    STARTUP_WAIT_SECS = 10.0

    # Grace period after setting shutdown_event before processes are terminated
    STOP_WAIT_SECS = 3.0

    def __init__(self, size: int, mp_ctx: Optional[mpc.BaseContext] = None):
        if size < 1:
            raise ValueError(f"A worker pool needs at least one worker, got {size}")
        self.size = size
        self.mp_ctx = mp_ctx or multiprocessing.get_context()
        self.log = functools.partial(logging.log, extra=dict(source="MAIN"))
        self.shutdown_event = self.mp_ctx.Event()
        self.event_queue = MPQueue(ctx=self.mp_ctx)
        self.work_queue = MPQueue(ctx=self.mp_ctx)
        self.procs: List[multiprocessing.Process] = []

    def __enter__(self):
        for i in range(self.size):
            self._start(f"BenchWorker{i}")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_type:
            self.log(logging.ERROR, f"Exception: {exc_val}", exc_info=(exc_type, exc_val, exc_tb))
        self.stop()
        return False

    def _start(self, name: str) -> None:
        startup_event = self.mp_ctx.Event()
        proc = self.mp_ctx.Process(
            target=_worker_main,
            name=name,
            args=(name, startup_event, self.shutdown_event, self.event_queue, self.work_queue),
        )
        proc.start()
        self.procs.append(proc)
        if not startup_event.wait(timeout=self.STARTUP_WAIT_SECS):
            raise RuntimeError(
                f"Process {name} failed to startup after {self.STARTUP_WAIT_SECS} seconds"
            )

    def run(self, requests: List[RunRequest]) -> List[BenchTrace]:
        """
        Execute the requests on the pool's workers, returning their traces
        in request order.

        :raises BenchmarkRunError: if a run raised in a worker
        """
        for index, request in enumerate(requests):
            self.work_queue.put((index, request))
        for _ in self.procs:
            self.work_queue.put(END)

        results: Dict[int, BenchTrace] = {}
        finished = 0
        while len(results) < len(requests):
            evt = self.event_queue.safe_get()
            if evt is None:
                if finished == len(self.procs) or not any(p.is_alive() for p in self.procs):
                    raise BenchmarkRunError(
                        f"Workers exited with {len(requests) - len(results)} runs outstanding"
                    )
                continue
            if evt.msg_type == "RESULT":
                index, trace = evt.msg
                results[index] = trace
            elif evt.msg_type == "PUBSUB":
                payload = evt.msg
                pub.sendMessage(payload["topic"], msg_src=evt.msg_src, **payload["kwargs"])
            elif evt.msg_type == "FATAL":
                self.log(logging.ERROR, "%s failed", evt.msg_src)
                raise BenchmarkRunError(f"Benchmark run failed in {evt.msg_src}") from evt.msg
            elif evt.msg_type == "SHUTDOWN":
                finished += 1
        return [results[i] for i in range(len(requests))]

    def stop(self) -> None:
        """
        Stop every worker, terminating any that do not exit within the grace
        period, and close the queues.
        """
        self.shutdown_event.set()
        end_time = time.time() + self.STOP_WAIT_SECS
        for proc in self.procs:
            proc.join(max(0.0, end_time - time.time()))
        for proc in self.procs:
            if proc.is_alive():
                self.log(logging.WARNING, "Terminating %s", proc.name)
                proc.terminate()
                proc.join(0.1)
        self.procs.clear()
        for queue in (self.work_queue, self.event_queue):
            queue.safe_close()
