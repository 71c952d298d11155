use std::net::SocketAddr;
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use stereoportal::scene::transition_scene;
use stereoportal_stream::protocol::{checksum, FrameMessage, Hello, InputAction, InputEvent, Toggle};
use stereoportal_stream::{serve, serve_listener, ServerConfig, ServerError, SessionConfig};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::oneshot;
use tokio_tungstenite::tungstenite::Message;

type Client = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<TcpStream>>;

struct Running {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<Result<(), ServerError>>,
}

impl Running {
    async fn shutdown(mut self) {
        let _ = self.stop.take().unwrap().send(());
        tokio::time::timeout(Duration::from_secs(10), self.task)
            .await
            .expect("server stops")
            .unwrap()
            .unwrap();
    }
}

async fn start(config: ServerConfig) -> Running {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (stop, stopped) = oneshot::channel();
    let scene = transition_scene().0;
    let task = tokio::spawn(serve_listener(listener, scene, config, async {
        let _ = stopped.await;
    }));
    Running {
        addr,
        stop: Some(stop),
        task,
    }
}

fn fast() -> ServerConfig {
    ServerConfig {
        session: SessionConfig {
            width: 48,
            height: 48,
            rate_hz: 120,
            speed: 6.0,
            ..SessionConfig::default()
        },
        static_dir: None,
    }
}

async fn http_get(addr: SocketAddr, path: &str) -> String {
    let mut stream = TcpStream::connect(addr).await.unwrap();
    let request = format!("GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n");
    stream.write_all(request.as_bytes()).await.unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).await.unwrap();
    response
}

async fn connect(addr: SocketAddr) -> (Client, Hello) {
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap();
    let hello = match ws.next().await.unwrap().unwrap() {
        Message::Binary(bytes) => Hello::decode(&bytes).unwrap(),
        other => panic!("expected hello, got {other:?}"),
    };
    (ws, hello)
}

async fn next_frame(ws: &mut Client) -> FrameMessage {
    loop {
        let message = tokio::time::timeout(Duration::from_secs(10), ws.next())
            .await
            .expect("frame within 10 s")
            .unwrap()
            .unwrap();
        if let Message::Binary(bytes) = message {
            return FrameMessage::decode(&bytes).unwrap();
        }
    }
}

async fn send(ws: &mut Client, action: InputAction) {
    ws.send(Message::Text(InputEvent::new(action).to_json().into())).await.unwrap();
}

#[tokio::test]
async fn health_and_page_are_served() {
    let server = start(fast()).await;
    let health = http_get(server.addr, "/healthz").await;
    assert!(health.starts_with("HTTP/1.1 200"), "{health}");
    assert!(health.ends_with("ok\n"));
    let page = http_get(server.addr, "/").await;
    assert!(page.starts_with("HTTP/1.1 200"));
    assert!(page.contains("<canvas"));
    server.shutdown().await;
}

#[tokio::test]
async fn static_directory_is_served() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<p>viewer build</p>").unwrap();
    let server = start(ServerConfig {
        static_dir: Some(dir.path().to_path_buf()),
        ..fast()
    })
    .await;
    let page = http_get(server.addr, "/index.html").await;
    assert!(page.contains("viewer build"));
    let missing = http_get(server.addr, "/nope.js").await;
    assert!(missing.starts_with("HTTP/1.1 404"));
    server.shutdown().await;
}

#[tokio::test]
async fn idle_server_renders_nothing_until_someone_connects() {
    let server = start(fast()).await;
    tokio::time::sleep(Duration::from_millis(300)).await;
    let (mut ws, hello) = connect(server.addr).await;
    assert!(hello.authority);
    assert_eq!((hello.width, hello.height, hello.rate_hz), (48, 48, 120));
    let first = next_frame(&mut ws).await;
    assert!(first.header.frame < 5, "frame {} rendered before anyone watched", first.header.frame);
    assert_eq!(first.header.checksum, checksum(&first.png));
    let image = image_size(&first.png);
    assert_eq!(image, (96, 48));
    drop(ws);
    server.shutdown().await;
}

fn image_size(png: &[u8]) -> (u32, u32) {
    // PNG IHDR: width and height are big-endian at offsets 16 and 20
    (
        u32::from_be_bytes(png[16..20].try_into().unwrap()),
        u32::from_be_bytes(png[20..24].try_into().unwrap()),
    )
}

#[tokio::test]
async fn scripted_walk_changes_space_once_and_toggles_are_acknowledged() {
    let server = start(fast()).await;
    let (mut driver, hello) = connect(server.addr).await;
    assert!(hello.authority);
    let (mut spectator, spectator_hello) = connect(server.addr).await;
    assert!(!spectator_hello.authority);

    // spectators cannot steer
    send(&mut spectator, InputAction::Move { forward: -1.0, strafe: 0.0 }).await;
    send(&mut driver, InputAction::Move { forward: 1.0, strafe: 0.0 }).await;
    let mut spaces = Vec::new();
    let mut last = next_frame(&mut driver).await;
    let start_z = last.header.metrics.head_position[2];
    while spaces.len() < 400 {
        assert_eq!(last.header.checksum, checksum(&last.png));
        spaces.push(last.header.metrics.space);
        if last.header.metrics.space == 2 && last.header.metrics.head_position[2] > 1.0 {
            break;
        }
        last = next_frame(&mut driver).await;
    }
    let changes = spaces.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(changes, 1, "space sequence {spaces:?}");
    assert_eq!(spaces[0], 1);
    assert!(start_z > 0.0);
    send(&mut driver, InputAction::Move { forward: 0.0, strafe: 0.0 }).await;

    // toggle and watch for the flag within a couple of frames of the
    // first frame rendered after the input arrived
    assert!(last.header.flags.portal_box);
    let before = last.header.frame;
    send(&mut driver, InputAction::Toggle { toggle: Toggle::PortalBox }).await;
    let mut acknowledged = None;
    for _ in 0..200 {
        let frame = next_frame(&mut driver).await;
        if !frame.header.flags.portal_box {
            acknowledged = Some(frame.header.frame);
            break;
        }
    }
    assert!(acknowledged.is_some_and(|f| f > before));

    // the spectator saw the same frames
    let seen = next_frame(&mut spectator).await;
    assert_eq!(seen.header.checksum, checksum(&seen.png));
    drop(driver);
    drop(spectator);
    server.shutdown().await;
}

#[tokio::test]
async fn authority_passes_on_after_disconnect() {
    let server = start(fast()).await;
    let (first, hello) = connect(server.addr).await;
    assert!(hello.authority);
    drop(first);
    tokio::time::sleep(Duration::from_millis(200)).await;
    let (_second, hello) = connect(server.addr).await;
    assert!(hello.authority);
    server.shutdown().await;
}

#[tokio::test]
async fn busy_port_is_reported() {
    let taken = TcpListener::bind("0.0.0.0:0").await.unwrap();
    let port = taken.local_addr().unwrap().port();
    let result = serve(transition_scene().0, fast(), port).await;
    assert!(matches!(result, Err(ServerError::Bind { port: p, .. }) if p == port));
}
