#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
cli 모듈 - pyredactlib 명령줄 도구

키 관리, 체인 구성, 수정 요청 수명 주기, 감사, 검증, 시뮬레이션 실행을 하위 명령으로 제공합니다.
종료 코드: 0 성공, 2 사용법/설정 오류, 3 권한 오류, 4 무결성 오류.
비밀 값(트랩도어, 지분, 감독 자격 증명)은 파일이나 환경 변수로만 받습니다.
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

from pyredactlib import __version__
from pyredactlib.canonical import write_text_atomic
from pyredactlib.chamHash import SUPPORTED_SECURITY_BITS, ChameleonKeyPair
from pyredactlib.clawFree import BitMessage
from pyredactlib.governance import Governance, RequestState
from pyredactlib.governanceConfig import GovernanceConfig, GovernanceMode
from pyredactlib.header import Header
from pyredactlib.randomSource import make_rng
from pyredactlib.redactErrors import AuthorizationError, IntegrityError, ParameterError, RedactError
from pyredactlib.simConfig import SimConfig

logger = logging.getLogger(__name__)

ENV_SECRET_KEY = "PYREDACTLIB_SECRET_KEY"
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

EXIT_OK = 0
EXIT_USAGE = 2

PENDING_SUFFIX = ".pending"
REQUESTS_SUFFIX = ".requests"
GOVERNANCE_SUFFIX = ".governance"

_handler: Optional[logging.Handler] = None


def setup_logging(log_file: Optional[str] = None, verbose: bool = False) -> None:
    """
    루트 로거에 핸들러를 한 번 붙입니다. 라이브러리 모듈은 핸들러를 직접 달지 않습니다.

    Args:
        log_file: 로그 파일 경로 (기본값: None, 표준 에러로 출력)
        verbose: DEBUG 까지 기록할지 여부
    """
    global _handler
    root = logging.getLogger()
    if _handler is not None:
        root.removeHandler(_handler)
        _handler.close()
    if log_file:
        handler = logging.FileHandler(log_file, encoding='utf-8')
        level = logging.DEBUG if verbose else logging.INFO
    else:
        handler = logging.StreamHandler(sys.stderr)
        level = logging.DEBUG if verbose else logging.WARNING
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(level)
    _handler = handler


def _hex_height(height: int) -> str:
    return f"{height} (0x{height:x})"


def _refuse_existing(paths: List[str], force: bool) -> None:
    existing = [path for path in paths if os.path.exists(path)]
    if existing and not force:
        raise ParameterError(f"출력 파일이 이미 있습니다 (--force 로 덮어쓰기): {', '.join(existing)}")


def _read_payload(args) -> bytes:
    if getattr(args, "erase", False):
        return b""
    if args.payload_hex is not None:
        try:
            return bytes.fromhex(args.payload_hex)
        except ValueError:
            raise ParameterError(f"--payload-hex 값이 16진수가 아닙니다: {args.payload_hex!r}")
    if args.payload is not None:
        return args.payload.encode("utf-8")
    raise ParameterError("--payload 또는 --payload-hex 가 필요합니다.")


def _sealed_tx_ids(chain) -> set:
    return {tx.tx_id for block in chain.blocks for tx in block.transactions}


def _parse_tx_id(text: str) -> bytes:
    try:
        return bytes.fromhex(text)
    except ValueError:
        raise ParameterError(f"tx id 가 16진수가 아닙니다: {text!r}")


def _load_secret_key(header: Header, args) -> ChameleonKeyPair:
    key_path = getattr(args, "secret_key", None) or os.environ.get(ENV_SECRET_KEY)
    if not key_path:
        raise AuthorizationError(f"트랩도어 키 파일이 필요합니다 (--secret-key 또는 {ENV_SECRET_KEY}).")
    key = header.chamHash.load_key(key_path)
    if not key.has_trapdoor:
        raise AuthorizationError(f"트랩도어가 없는 공개 키 파일입니다: {key_path}")
    return key


def _load_governance(header: Header, chain_path: str) -> Governance:
    config_path = chain_path + GOVERNANCE_SUFFIX
    governance = header.governance(config_path if os.path.exists(config_path) else None)
    governance.load(chain_path + REQUESTS_SUFFIX)
    return governance


# ---- keygen / key split ----

def cmd_keygen(header: Header, args) -> int:
    public_path, secret_path = args.out + ".pub.json", args.out + ".key.json"
    _refuse_existing([public_path, secret_path], args.force)
    key = header.chamHash.keygen(args.bits, seed=args.seed)
    header.chamHash.save_key(key, public_path)
    header.chamHash.save_key(key, secret_path, include_secret=True)
    print(f"공개 키: {public_path}")
    print(f"비밀 키: {secret_path}")
    print(f"지문: {header.chamHash.fingerprint(key)}")
    if key.insecure:
        print("경고: 64비트 키는 테스트 전용이며 안전하지 않습니다.")
    return EXIT_OK


def cmd_key_split(header: Header, args) -> int:
    key = _load_secret_key(header, args)
    share_paths = [f"{args.out}.share{index}.json" for index in range(1, args.count + 1)]
    _refuse_existing(share_paths, args.force)
    shares = header.secretShare.split_trapdoor(key.tk, args.threshold, args.count, key.params.q, make_rng(args.seed))
    for share, share_path in zip(shares, share_paths):
        header.secretShare.save_share(share, share_path)
        print(f"지분 {share.index}: {share_path}")
    return EXIT_OK


# ---- chain / tx / block ----

def cmd_chain_init(header: Header, args) -> int:
    _refuse_existing([args.chain], args.force)
    key = header.chamHash.load_key(args.key).public()
    config = GovernanceConfig().load(args.governance) if args.governance else GovernanceConfig().load()
    if config.mode == GovernanceMode.PUBLIC_TRAPDOOR and config.public_trapdoor is None:
        secret = _load_secret_key(header, args)
        if secret.hk != key.hk:
            raise ParameterError("비밀 키가 체인 공개 키와 짝이 아닙니다.")
        config.public_trapdoor = secret.tk
    chain = header.ledger.new_chain(key, args.timestamp)
    with header.chainFile.lock(args.chain):
        header.chainFile.save(chain, args.chain)
        config.save(args.chain + GOVERNANCE_SUFFIX)
    print(f"체인 생성: {args.chain} (모드 {config.mode.value}, 지문 {header.chamHash.fingerprint(key)})")
    return EXIT_OK


def cmd_chain_verify(header: Header, args) -> int:
    chain = header.chainFile.load(args.chain)
    report = header.ledger.validate_chain(chain)
    if report.ok:
        print(f"검증 성공: 높이 {_hex_height(chain.height)}")
        return EXIT_OK
    print(f"검증 실패: {report.describe()}")
    return IntegrityError.exit_code


def cmd_tx_add(header: Header, args) -> int:
    payload = _read_payload(args)
    pending_path = args.chain + PENDING_SUFFIX
    with header.chainFile.lock(args.chain):
        chain = header.chainFile.load(args.chain)
        pending = []
        if os.path.exists(pending_path):
            with open(pending_path, "r", encoding="utf-8") as f:
                pending = header.chainFile.load_transactions(f.read())
        tx = header.ledger.create_transaction(chain.key, payload, make_rng(args.seed))
        if tx.tx_id in _sealed_tx_ids(chain) or any(item.tx_id == tx.tx_id for item in pending):
            raise ParameterError(f"이미 있는 tx_id 입니다: {tx.tx_id.hex()} (--seed 를 바꾸세요)")
        pending.append(tx)
        write_text_atomic(pending_path, header.chainFile.dump_transactions(pending))
    print(f"트랜잭션 추가: {tx.tx_id.hex()} (대기 {len(pending)}개)")
    return EXIT_OK


def cmd_block_seal(header: Header, args) -> int:
    pending_path = args.chain + PENDING_SUFFIX
    with header.chainFile.lock(args.chain):
        chain = header.chainFile.load(args.chain)
        if not os.path.exists(pending_path):
            raise ParameterError("봉인할 대기 트랜잭션이 없습니다.")
        with open(pending_path, "r", encoding="utf-8") as f:
            pending = header.chainFile.load_transactions(f.read())
        # 체인 저장 뒤 대기 파일 삭제 전에 중단된 봉인은 대기 파일만 정리
        sealed = _sealed_tx_ids(chain)
        if pending and all(tx.tx_id in sealed for tx in pending):
            os.remove(pending_path)
            logger.warning(f"이미 봉인된 대기 트랜잭션 {len(pending)}개를 정리했습니다.")
            print(f"대기 트랜잭션이 이미 높이 {_hex_height(chain.height)} 까지 봉인되어 있어 대기 파일만 정리했습니다.")
            return EXIT_OK
        block = header.ledger.seal_block(chain, pending, args.timestamp)
        header.chainFile.save(chain, args.chain)
        os.remove(pending_path)
    print(f"블록 봉인: 높이 {_hex_height(block.height)}, 해시 {block.block_hash.hex()}, 트랜잭션 {len(pending)}개")
    return EXIT_OK


# ---- redact ----

def cmd_redact_propose(header: Header, args) -> int:
    payload = _read_payload(args)
    with header.chainFile.lock(args.chain):
        chain = header.chainFile.load(args.chain)
        governance = _load_governance(header, args.chain)
        request = governance.open_request(chain, args.block, _parse_tx_id(args.tx), payload, args.proposer)
        governance.save(args.chain + REQUESTS_SUFFIX)
    kind = "삭제" if request.is_erase else "수정"
    print(f"{kind} 요청 {request.request_id}: 상태 {request.state.value}")
    return EXIT_OK


def cmd_redact_vote(header: Header, args) -> int:
    with header.chainFile.lock(args.chain):
        chain = header.chainFile.load(args.chain)
        governance = _load_governance(header, args.chain)
        governance.cast_vote(args.request, args.voter, args.approve, chain.height)
        governance.save(args.chain + REQUESTS_SUFFIX)
    request = governance.get_request(args.request)
    print(f"투표 기록: {args.voter} → {args.request} (찬성 {request.approvals} / 투표 {len(request.votes)})")
    return EXIT_OK


def cmd_redact_tally(header: Header, args) -> int:
    # 읽기 전용: 상태를 저장하지 않고 현재 집계 결과만 출력
    chain = header.chainFile.load(args.chain)
    governance = _load_governance(header, args.chain)
    request = governance.get_request(args.request)
    state = governance.outcome(request, chain.height)
    print(f"요청 {args.request}: {state.value} (찬성 {request.approvals}, 등록 투표자 {len(governance.config.voters)}, "
          f"정족수 {governance.config.quorum})")
    return EXIT_OK


def cmd_redact_veto(header: Header, args) -> int:
    with open(args.credential_file, "r", encoding="utf-8") as f:
        credential = f.read().strip()
    with header.chainFile.lock(args.chain):
        governance = _load_governance(header, args.chain)
        governance.oversight_veto(args.request, credential)
        governance.save(args.chain + REQUESTS_SUFFIX)
    print(f"요청 {args.request}: {RequestState.VETOED.value}")
    return EXIT_OK


def cmd_redact_execute(header: Header, args) -> int:
    with header.chainFile.lock(args.chain):
        chain = header.chainFile.load(args.chain)
        governance = _load_governance(header, args.chain)
        state = governance.tally(args.request, chain.height)
        # 체인 파일이 먼저 저장되므로, 등록부 저장 전에 중단된 실행은 스탬프로 알아보고 마무리
        applied = [stamp for block in chain.blocks for stamp in block.header.redaction_meta
                   if stamp.request_id == args.request]
        if applied and state == RequestState.APPROVED:
            governance.record_execution(args.request, chain.height)
            governance.save(args.chain + REQUESTS_SUFFIX)
            print(f"요청 {args.request} 은 이미 체인에 반영되어 있어 등록부만 Executed 로 맞췄습니다.")
            return EXIT_OK
        trapdoor, shares = None, None
        if governance.mode == GovernanceMode.CENTRAL:
            trapdoor = _load_secret_key(header, args).tk
        elif governance.mode == GovernanceMode.CONSORTIUM:
            shares = [header.secretShare.load_share(path) for path in args.share or []]
        hashes_before = chain.block_hashes()
        stamp = governance.execute_redaction(args.request, chain, trapdoor=trapdoor, shares=shares)
        hashes_after = chain.block_hashes()
        if hashes_before != hashes_after:
            raise IntegrityError("수정 후 블록 해시가 바뀌었습니다.")
        header.chainFile.save(chain, args.chain)
        governance.save(args.chain + REQUESTS_SUFFIX)
    print(f"요청 {args.request} 실행 완료: tx {stamp.tx_id.hex()}")
    print(f"블록 해시 {len(hashes_after)}개 변경 없음 (팁 {hashes_after[-1].hex()})")
    return EXIT_OK


def cmd_redact_audit(header: Header, args) -> int:
    chain = header.chainFile.load(args.chain)
    tx_id = _parse_tx_id(args.tx)
    block, tx = chain.find_transaction(tx_id)
    stamps = header.ledger.audit_history(chain, tx_id)
    print(f"tx {tx_id.hex()}: 블록 {_hex_height(block.height)}, 버전 {tx.version}, 수정 {len(stamps)}회")
    for stamp in stamps:
        print(f"  {stamp.request_id}: 승인 높이 {_hex_height(stamp.approved_at)}, "
              f"이전 페이로드 커밋 {stamp.old_payload_commitment.hex()}")
    return EXIT_OK


# ---- cf / sim ----

def cmd_cf_demo(header: Header, args) -> int:
    rng = make_rng(args.seed)
    m_old, m_new = BitMessage.from_string(args.message), BitMessage.from_string(args.new_message)
    if len(m_old) != len(m_new):
        raise ParameterError("두 메시지의 비트 길이가 같아야 합니다.")
    pair = header.clawFree.cf_keygen(args.bits_per_prime, len(m_old), rng=rng)
    r_old = header.clawFree.sample_domain(pair, rng)
    digest = header.clawFree.cf_hash(pair, m_old, r_old)
    r_new = header.clawFree.cf_adapt(pair, m_old, r_old, m_new)
    same = header.clawFree.cf_hash(pair.public(), m_new, r_new) == digest
    print(f"n = {pair.n} (0x{pair.n:x}), k = {pair.k}")
    print(f"H({m_old}, 0x{r_old:x}) = 0x{digest:x}")
    print(f"H({m_new}, 0x{r_new:x}) = 0x{digest:x}: {'일치' if same else '불일치'}")
    return EXIT_OK if same else IntegrityError.exit_code


def cmd_sim_run(header: Header, args) -> int:
    config = SimConfig().load(args.config)
    report = header.netSim.run_simulation(config)
    text = report.to_text()
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_text_atomic(os.path.join(args.out, "report.txt"), text)
        write_text_atomic(os.path.join(args.out, "report.jsonl"), report.dumps())
    print(text, end="")
    if report.divergences:
        logger.warning(f"복제본 불일치 노드 {len(report.divergences)}개")
        print(f"경고: 복제본 불일치 노드 {len(report.divergences)}개")
    return EXIT_OK if report.safe else IntegrityError.exit_code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pyredactlib", description="카멜레온 해시 기반 수정 가능 블록체인 도구")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-file", help="로그 파일 경로")
    parser.add_argument("-v", "--verbose", action="store_true", help="DEBUG 로그 출력")
    commands = parser.add_subparsers(dest="command", required=True)

    keygen = commands.add_parser("keygen", help="카멜레온 키 쌍 생성")
    keygen.add_argument("--bits", type=int, required=True, choices=SUPPORTED_SECURITY_BITS)
    keygen.add_argument("--seed", type=int, help="재현용 시드 (생략하면 안전한 난수)")
    keygen.add_argument("--out", required=True, help="출력 경로 접두사 (<out>.pub.json, <out>.key.json)")
    keygen.add_argument("--force", action="store_true")
    keygen.set_defaults(handler=cmd_keygen)

    key = commands.add_parser("key", help="키 관리").add_subparsers(dest="key_command", required=True)
    split = key.add_parser("split", help="트랩도어를 (t, n) 지분으로 분산")
    split.add_argument("--secret-key", help=f"비밀 키 파일 (생략하면 {ENV_SECRET_KEY})")
    split.add_argument("--threshold", type=int, required=True)
    split.add_argument("--count", type=int, required=True)
    split.add_argument("--seed", type=int)
    split.add_argument("--out", required=True, help="출력 경로 접두사 (<out>.share<i>.json)")
    split.add_argument("--force", action="store_true")
    split.set_defaults(handler=cmd_key_split)

    chain = commands.add_parser("chain", help="체인 파일 관리").add_subparsers(dest="chain_command", required=True)
    init = chain.add_parser("init", help="제네시스만 있는 체인 생성")
    init.add_argument("--chain", required=True)
    init.add_argument("--key", required=True, help="공개 키 파일")
    init.add_argument("--governance", help="거버넌스 설정 파일 (생략하면 번들 기본값)")
    init.add_argument("--secret-key", help="PUBLIC_TRAPDOOR 모드에서 공개할 트랩도어의 키 파일")
    init.add_argument("--timestamp", type=int, default=0)
    init.add_argument("--force", action="store_true")
    init.set_defaults(handler=cmd_chain_init)
    verify = chain.add_parser("verify", help="체인 전체 검증")
    verify.add_argument("--chain", required=True)
    verify.set_defaults(handler=cmd_chain_verify)

    tx = commands.add_parser("tx", help="트랜잭션").add_subparsers(dest="tx_command", required=True)
    add = tx.add_parser("add", help="대기 목록에 트랜잭션 추가")
    add.add_argument("--chain", required=True)
    add.add_argument("--payload")
    add.add_argument("--payload-hex")
    add.add_argument("--seed", type=int)
    add.set_defaults(handler=cmd_tx_add)

    block = commands.add_parser("block", help="블록").add_subparsers(dest="block_command", required=True)
    seal = block.add_parser("seal", help="대기 트랜잭션으로 블록 봉인")
    seal.add_argument("--chain", required=True)
    seal.add_argument("--timestamp", type=int, required=True)
    seal.set_defaults(handler=cmd_block_seal)

    redact = commands.add_parser("redact", help="수정 요청 수명 주기").add_subparsers(dest="redact_command", required=True)
    propose = redact.add_parser("propose", help="수정 요청 생성")
    propose.add_argument("--chain", required=True)
    propose.add_argument("--block", type=int, required=True)
    propose.add_argument("--tx", required=True)
    propose.add_argument("--proposer", required=True)
    propose.add_argument("--payload")
    propose.add_argument("--payload-hex")
    propose.add_argument("--erase", action="store_true", help="페이로드 삭제 요청")
    propose.set_defaults(handler=cmd_redact_propose)

    vote = redact.add_parser("vote", help="투표")
    vote.add_argument("--chain", required=True)
    vote.add_argument("--request", required=True)
    vote.add_argument("--voter", required=True)
    choice = vote.add_mutually_exclusive_group(required=True)
    choice.add_argument("--approve", dest="approve", action="store_true")
    choice.add_argument("--reject", dest="approve", action="store_false")
    vote.set_defaults(handler=cmd_redact_vote)

    tally = redact.add_parser("tally", help="집계 결과 출력 (파일을 바꾸지 않음)")
    tally.add_argument("--chain", required=True)
    tally.add_argument("--request", required=True)
    tally.set_defaults(handler=cmd_redact_tally)

    veto = redact.add_parser("veto", help="감독 기관 거부권 행사")
    veto.add_argument("--chain", required=True)
    veto.add_argument("--request", required=True)
    veto.add_argument("--credential-file", required=True)
    veto.set_defaults(handler=cmd_redact_veto)

    execute = redact.add_parser("execute", help="승인된 요청 실행")
    execute.add_argument("--chain", required=True)
    execute.add_argument("--request", required=True)
    execute.add_argument("--secret-key", help=f"CENTRAL 모드 비밀 키 파일 (생략하면 {ENV_SECRET_KEY})")
    execute.add_argument("--share", action="append", help="CONSORTIUM 모드 지분 파일 (여러 번 지정)")
    execute.set_defaults(handler=cmd_redact_execute)

    audit = redact.add_parser("audit", help="트랜잭션 수정 이력 출력")
    audit.add_argument("--chain", required=True)
    audit.add_argument("--tx", required=True)
    audit.set_defaults(handler=cmd_redact_audit)

    cf = commands.add_parser("cf", help="claw-free 백엔드").add_subparsers(dest="cf_command", required=True)
    demo = cf.add_parser("demo", help="데스크 규모 claw-free 해시와 충돌 시연")
    demo.add_argument("--bits-per-prime", type=int, default=8)
    demo.add_argument("--message", default="101")
    demo.add_argument("--new-message", default="010")
    demo.add_argument("--seed", type=int, default=0)
    demo.set_defaults(handler=cmd_cf_demo)

    sim = commands.add_parser("sim", help="네트워크 시뮬레이션").add_subparsers(dest="sim_command", required=True)
    run = sim.add_parser("run", help="시뮬레이션 실행")
    run.add_argument("--config", default="simDemo", help="설정 파일 경로 또는 번들 설정 이름")
    run.add_argument("--out", help="보고서 출력 디렉터리")
    run.set_defaults(handler=cmd_sim_run)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    명령줄 진입점.

    Returns:
        종료 코드 (0 성공, 2 사용법/설정, 3 권한, 4 무결성)
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_file, args.verbose)
    try:
        return args.handler(Header.get_instance(), args)
    except RedactError as e:
        logger.error(f"{args.command} 실패: {e}")
        print(f"오류: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"오류: {e}", file=sys.stderr)
        return EXIT_USAGE
